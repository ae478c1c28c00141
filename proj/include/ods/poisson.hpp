#pragma once

#include <cstdint>

#include "ods/raster.hpp"

namespace ods {

using ImageF = Raster<RgbaF>;

struct PoissonOptions {
    // Bound on the distance (intensity levels) between the returned field and
    // the exact discrete solution. The equation residual is also kept below 1e-3.
    double tolerance = 1e-3;
    int max_iterations = 0;  // 0 = 10 x region diagonal
    unsigned threads = 0;
};

struct PoissonStats {
    int iterations = 0;
    double max_residual = 0.0;
};

ImageF to_float(const Raster<Rgba8>& img);
Raster<Rgba8> to_bytes(const ImageF& img);

// Solves, per channel, lap(u) = lap(source) on mask != 0 with u = target elsewhere.
// The mask must be nonempty and must not touch the region border.
// Throws EmptyMask, BadParams, DimensionMismatch, NoConvergence.
ImageF poisson_solve(const ImageF& target, const ImageF& source, const Raster<uint8_t>& mask,
                     const PoissonOptions& options = {}, PoissonStats* stats = nullptr);

// Byte-image wrapper; pixels with mask > 0 are solved.
PlanarImage poisson_blend(const PlanarImage& target_region, const PlanarImage& source, const Mask& mask,
                          const PoissonOptions& options = {});

}  // namespace ods
