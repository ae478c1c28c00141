#pragma once

#include "ods/raster.hpp"

namespace ods {

inline constexpr int kCrossKernelRadius = 2;
inline constexpr int kDefaultMaxFillIterations = 50;
inline constexpr int kMaskCloseRadius = 3;

struct DenseResult {
    DepthMap depth;  // valid exactly where mask > 0
    Mask mask;       // soft object mask in [0, 1]
};

// One fill pass: every invalid pixel with at least one valid pixel on its
// radius-2 cross (up/down/left/right arms) takes the mean depth and alpha of
// those pixels. Reads only the input map.
DepthMap cross_kernel_fill(const DepthMap& depth);

// Closing with a disk of radius 3, hole filling (repeated until stable), then
// a 3x3 binomial softening applied inside the support only.
Mask estimate_mask(const DepthMap& sparse);

// Iterated cross-kernel interpolation inside estimate_mask's support. Input
// depths are never changed. Pixels the passes cannot reach within max_iters
// take their nearest valid depth. Throws EmptyInput.
DenseResult densify(const DepthMap& sparse, int max_iters = kDefaultMaxFillIterations);

// Pluggable densification stage used by the composition pipeline.
class Densifier {
public:
    virtual ~Densifier() = default;
    virtual DenseResult run(const DepthMap& sparse) const = 0;
};

class InterpolationDensifier final : public Densifier {
public:
    explicit InterpolationDensifier(int max_iters = kDefaultMaxFillIterations) : max_iters_(max_iters) {}
    DenseResult run(const DepthMap& sparse) const override { return densify(sparse, max_iters_); }

private:
    int max_iters_;
};

}  // namespace ods
