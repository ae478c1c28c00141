#include "ods/poisson.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ods/error.hpp"
#include "ods/parallel.hpp"

namespace ods {

namespace {

constexpr double kMaxEquationResidual = 1e-3;

struct Grid {
    int w = 0;
    int h = 0;
    std::vector<double> u;     // solution, channel-major
    std::vector<double> rhs;   // 4 s_i - sum s_j for masked nodes
    std::vector<uint8_t> free;

    size_t at(int c, int x, int y) const {
        return (static_cast<size_t>(c) * static_cast<size_t>(h) + static_cast<size_t>(y)) * static_cast<size_t>(w) +
               static_cast<size_t>(x);
    }
};

float channel(const RgbaF& p, int c) {
    switch (c) {
        case 0: return p.r;
        case 1: return p.g;
        case 2: return p.b;
        default: return p.a;
    }
}

void set_channel(RgbaF& p, int c, float v) {
    switch (c) {
        case 0: p.r = v; break;
        case 1: p.g = v; break;
        case 2: p.b = v; break;
        default: p.a = v; break;
    }
}

double residual_at(const Grid& g, int c, int x, int y) {
    const double lap = 4.0 * g.u[g.at(c, x, y)] - g.u[g.at(c, x - 1, y)] - g.u[g.at(c, x + 1, y)] -
                       g.u[g.at(c, x, y - 1)] - g.u[g.at(c, x, y + 1)];
    return g.rhs[g.at(c, x, y)] - lap;
}

}  // namespace

ImageF to_float(const Raster<Rgba8>& img) {
    ImageF out(img.width(), img.height());
    for (size_t i = 0; i < img.size(); ++i) out[i] = {float(img[i].r), float(img[i].g), float(img[i].b), float(img[i].a)};
    return out;
}

Raster<Rgba8> to_bytes(const ImageF& img) {
    Raster<Rgba8> out(img.width(), img.height());
    for (size_t i = 0; i < img.size(); ++i) out[i] = to_rgba8(img[i]);
    return out;
}

ImageF poisson_solve(const ImageF& target, const ImageF& source, const Raster<uint8_t>& mask,
                     const PoissonOptions& options, PoissonStats* stats) {
    if (!target.same_shape(source) || !target.same_shape(mask)) {
        throw Error(ErrorCode::DimensionMismatch, "poisson: target, source and mask differ in size");
    }
    const int w = target.width();
    const int h = target.height();
    int x_lo = w, x_hi = -1, y_lo = h, y_hi = -1;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y)) continue;
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) {
                throw Error(ErrorCode::BadParams, "poisson: mask touches the region border");
            }
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
        }
    }
    if (x_hi < 0) throw Error(ErrorCode::EmptyMask, "poisson: mask has no interior pixels");
    if (!(options.tolerance > 0)) throw Error(ErrorCode::BadParams, "poisson: tolerance must be positive");

    Grid g;
    g.w = w;
    g.h = h;
    g.u.resize(4 * target.size());
    g.rhs.assign(4 * target.size(), 0.0);
    g.free.assign(target.size(), 0);
    for (size_t i = 0; i < mask.size(); ++i) g.free[i] = mask[i] ? 1 : 0;
    for (int c = 0; c < 4; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                g.u[g.at(c, x, y)] = channel(target(x, y), c);
                if (!mask(x, y)) continue;
                g.rhs[g.at(c, x, y)] = 4.0 * channel(source(x, y), c) - channel(source(x - 1, y), c) -
                                       channel(source(x + 1, y), c) - channel(source(x, y - 1), c) -
                                       channel(source(x, y + 1), c);
            }
        }
    }

    const int bw = x_hi - x_lo + 1;
    const int bh = y_hi - y_lo + 1;
    const double pi = std::numbers::pi;
    // Smallest eigenvalue of the Dirichlet Laplacian on the bounding box; the
    // masked domain's is no smaller.
    const double lambda_min = 4.0 * std::pow(std::sin(pi / (2.0 * (bw + 1))), 2) +
                              4.0 * std::pow(std::sin(pi / (2.0 * (bh + 1))), 2);
    const double omega = 2.0 / (1.0 + std::sin(pi / (std::max(bw, bh) + 1)));
    const int cap = options.max_iterations > 0
                        ? options.max_iterations
                        : static_cast<int>(std::ceil(10.0 * std::hypot(double(bw), double(bh))));

    auto sweep = [&](int color) {
        parallel_for(
            static_cast<size_t>(bh),
            [&](size_t row) {
                const int y = y_lo + static_cast<int>(row);
                for (int x = x_lo + ((x_lo + y + color) & 1); x <= x_hi; x += 2) {
                    if (!g.free[static_cast<size_t>(y) * static_cast<size_t>(w) + static_cast<size_t>(x)]) continue;
                    for (int c = 0; c < 4; ++c) {
                        const size_t i = g.at(c, x, y);
                        const double gs = (g.rhs[i] + g.u[i - 1] + g.u[i + 1] + g.u[i - static_cast<size_t>(w)] +
                                           g.u[i + static_cast<size_t>(w)]) /
                                          4.0;
                        g.u[i] += omega * (gs - g.u[i]);
                    }
                }
            },
            options.threads);
    };
    auto converged = [&](double& max_res) {
        std::array<double, 4> sq{};
        max_res = 0.0;
        for (int y = y_lo; y <= y_hi; ++y) {
            for (int x = x_lo; x <= x_hi; ++x) {
                if (!mask(x, y)) continue;
                for (int c = 0; c < 4; ++c) {
                    const double r = residual_at(g, c, x, y);
                    sq[static_cast<size_t>(c)] += r * r;
                    max_res = std::max(max_res, std::abs(r));
                }
            }
        }
        const double worst = *std::max_element(sq.begin(), sq.end());
        return max_res < kMaxEquationResidual && std::sqrt(worst) / lambda_min < options.tolerance;
    };

    double max_res = 0.0;
    int iter = 0;
    bool done = converged(max_res);
    while (!done) {
        if (iter >= cap) {
            throw Error(ErrorCode::NoConvergence, "poisson: no convergence after " + std::to_string(cap) +
                                                      " iterations (residual " + std::to_string(max_res) + ")");
        }
        sweep(0);
        sweep(1);
        ++iter;
        if (iter % 4 == 0 || iter >= cap) done = converged(max_res);
    }
    if (stats) *stats = {iter, max_res};

    ImageF out = target;
    for (int y = y_lo; y <= y_hi; ++y) {
        for (int x = x_lo; x <= x_hi; ++x) {
            if (!mask(x, y)) continue;
            for (int c = 0; c < 4; ++c) set_channel(out(x, y), c, static_cast<float>(g.u[g.at(c, x, y)]));
        }
    }
    return out;
}

PlanarImage poisson_blend(const PlanarImage& target_region, const PlanarImage& source, const Mask& mask,
                          const PoissonOptions& options) {
    if (!target_region.same_shape(mask)) throw Error(ErrorCode::DimensionMismatch, "poisson: mask differs in size");
    Raster<uint8_t> m(mask.width(), mask.height());
    for (size_t i = 0; i < mask.size(); ++i) m[i] = mask[i] > 0.f ? 1 : 0;
    return to_bytes(poisson_solve(to_float(target_region), to_float(source), m, options));
}

}  // namespace ods
