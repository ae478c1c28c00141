#include "ods/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ods/error.hpp"

namespace ods {

namespace {

uint8_t to_byte(float v) {
    const float c = std::clamp(v, 0.f, 255.f);
    return static_cast<uint8_t>(std::lround(c));
}

template <typename Fetch>
RgbaF blend_four(double u, double v, Fetch&& fetch) {
    const double x = u - 0.5;
    const double y = v - 0.5;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const float fx = static_cast<float>(x - x0);
    const float fy = static_cast<float>(y - y0);
    const float w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
    const int ys[4] = {y0, y0, y0 + 1, y0 + 1};

    float r = 0, g = 0, b = 0, a = 0;
    for (int k = 0; k < 4; ++k) {
        if (w[k] == 0.f) continue;
        const Rgba8* p = fetch(xs[k], ys[k]);
        if (!p || p->a == 0) continue;
        const float wa = w[k] * p->a;
        r += wa * p->r;
        g += wa * p->g;
        b += wa * p->b;
        a += wa;
    }
    if (a <= 0.f) return {};
    return {r / a, g / a, b / a, a};
}

}  // namespace

Rgba8 to_rgba8(const RgbaF& c) { return {to_byte(c.r), to_byte(c.g), to_byte(c.b), to_byte(c.a)}; }

EquirectImage::EquirectImage(int width, int height, Rgba8 fill) : Raster<Rgba8>(width, height, fill) {
    if (width != 2 * height) {
        throw Error(ErrorCode::BadAspect,
                    "equirect image must be 2:1, got " + std::to_string(width) + "x" + std::to_string(height));
    }
}

EquirectImage::EquirectImage(Raster<Rgba8> pixels) : Raster<Rgba8>(std::move(pixels)) {
    if (width() != 2 * height() || width() == 0) {
        throw Error(ErrorCode::BadAspect,
                    "equirect image must be 2:1, got " + std::to_string(width()) + "x" + std::to_string(height()));
    }
}

DepthMap::DepthMap(int width, int height)
    : depth_(width, height, 0.f), valid_(width, height, 0), alpha_(width, height, 0.f) {}

void DepthMap::set(size_t i, float depth, float alpha) {
    if (!(depth > 0.f) || !std::isfinite(depth)) {
        throw Error(ErrorCode::NonPositiveDepth, "depth must be finite and positive");
    }
    depth_[i] = depth;
    valid_[i] = 1;
    alpha_[i] = std::clamp(alpha, 0.f, 1.f);
}

void DepthMap::set(int x, int y, float depth, float alpha) { set(depth_.index(x, y), depth, alpha); }

void DepthMap::invalidate(size_t i) {
    depth_[i] = 0.f;
    valid_[i] = 0;
    alpha_[i] = 0.f;
}

void DepthMap::invalidate(int x, int y) { invalidate(depth_.index(x, y)); }

size_t DepthMap::valid_count() const {
    return static_cast<size_t>(std::count(valid_.data().begin(), valid_.data().end(), uint8_t{1}));
}

float sample_bilinear(const Raster<float>& img, double u, double v) {
    if (img.empty()) return 0.f;
    const double x = std::clamp(u - 0.5, 0.0, static_cast<double>(img.width() - 1));
    const double y = std::clamp(v - 0.5, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const float fx = static_cast<float>(x - x0);
    const float fy = static_cast<float>(y - y0);
    return (1 - fx) * (1 - fy) * img(x0, y0) + fx * (1 - fy) * img(x1, y0) + (1 - fx) * fy * img(x0, y1) +
           fx * fy * img(x1, y1);
}

RgbaF sample_rgba(const PlanarImage& img, double u, double v) {
    return blend_four(u, v, [&](int x, int y) -> const Rgba8* {
        return img.contains(x, y) ? &img(x, y) : nullptr;
    });
}

RgbaF sample_rgba_wrap(const Raster<Rgba8>& img, double u, double v) {
    const int w = img.width();
    return blend_four(u, v, [&](int x, int y) -> const Rgba8* {
        if (y < 0 || y >= img.height() || w == 0) return nullptr;
        x %= w;
        if (x < 0) x += w;
        return &img(x, y);
    });
}

}  // namespace ods
