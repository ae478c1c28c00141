#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

namespace ods {

struct Rgba8 {
    uint8_t r = 0;
    uint8_t g = 0;
    uint8_t b = 0;
    uint8_t a = 0;

    constexpr bool operator==(const Rgba8&) const = default;
};

// Straight-alpha colour in [0, 255] per channel.
struct RgbaF {
    float r = 0.f;
    float g = 0.f;
    float b = 0.f;
    float a = 0.f;
};

Rgba8 to_rgba8(const RgbaF& c);

// Row-major 2D grid.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(static_cast<size_t>(width) * static_cast<size_t>(height), fill) {
        assert(width >= 0 && height >= 0);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(int w, int h) const { return width_ == w && height_ == h; }
    template <typename U>
    bool same_shape(const Raster<U>& o) const {
        return width_ == o.width() && height_ == o.height();
    }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    size_t index(int x, int y) const { return static_cast<size_t>(y) * static_cast<size_t>(width_) + static_cast<size_t>(x); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    std::span<T> row(int y) { return {data_.data() + index(0, y), static_cast<size_t>(width_)}; }
    std::span<const T> row(int y) const { return {data_.data() + index(0, y), static_cast<size_t>(width_)}; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Raster&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

// Straight (non-premultiplied) alpha RGBA image.
using PlanarImage = Raster<Rgba8>;
using Mask = Raster<float>;

// RGBA image in equirectangular layout; width must equal 2 * height.
class EquirectImage : public Raster<Rgba8> {
public:
    EquirectImage() = default;
    EquirectImage(int width, int height, Rgba8 fill = {});
    explicit EquirectImage(Raster<Rgba8> pixels);
};

struct StereoEquirect {
    EquirectImage left;
    EquirectImage right;

    int width() const { return left.width(); }
    int height() const { return left.height(); }
    bool operator==(const StereoEquirect&) const = default;
};

// Metric depth per pixel with validity and alpha. Invalid pixels carry depth 0.
class DepthMap {
public:
    DepthMap() = default;
    DepthMap(int width, int height);

    int width() const { return depth_.width(); }
    int height() const { return depth_.height(); }
    size_t size() const { return depth_.size(); }

    bool valid(int x, int y) const { return valid_(x, y) != 0; }
    bool valid(size_t i) const { return valid_[i] != 0; }
    float depth(int x, int y) const { return depth_(x, y); }
    float depth(size_t i) const { return depth_[i]; }
    float alpha(int x, int y) const { return alpha_(x, y); }
    float alpha(size_t i) const { return alpha_[i]; }

    // Throws NonPositiveDepth for depth <= 0 or non-finite; alpha is clamped to [0, 1].
    void set(int x, int y, float depth, float alpha = 1.f);
    void set(size_t i, float depth, float alpha = 1.f);
    void invalidate(int x, int y);
    void invalidate(size_t i);

    size_t valid_count() const;

    const Raster<float>& depths() const { return depth_; }
    const Raster<uint8_t>& validity() const { return valid_; }
    const Raster<float>& alphas() const { return alpha_; }

    bool operator==(const DepthMap&) const = default;

private:
    Raster<float> depth_;
    Raster<uint8_t> valid_;
    Raster<float> alpha_;
};

// Bilinear sample with pixel centres at integer + 0.5; edges clamp.
float sample_bilinear(const Raster<float>& img, double u, double v);

// Alpha-weighted bilinear RGBA sample (colour interpolated premultiplied).
// Samples falling outside the raster read as transparent.
RgbaF sample_rgba(const PlanarImage& img, double u, double v);

// Same as sample_rgba but wraps horizontally (equirect seam).
RgbaF sample_rgba_wrap(const Raster<Rgba8>& img, double u, double v);

}  // namespace ods
