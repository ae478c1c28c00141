#pragma once

#include <functional>
#include <vector>

#include "ods/raster.hpp"

namespace ods {

// Masks at successively halved resolutions; level 0 is full resolution.
using MaskPyramid = std::vector<Mask>;

// 2x2 box downsampling, `levels` entries in total (level 0 included).
MaskPyramid build_mask_pyramid(const Mask& mask, int levels);

struct LossWeights {
    double lambda_r = 0.4;
    double lambda_m = 0.6;
    double lambda_p = 1.0;

    // Throws BadParams when negative or all zero.
    void validate() const;
};

struct LossParts {
    double reconstruction = 0.0;
    double mask = 0.0;
    double perceptual = 0.0;  // externally supplied; zero when no feature network is available
};

// || gt - pred * mask ||_2 over all pixels. Invalid pixels count as depth 0.
double reconstruction_loss(const DepthMap& pred, const DepthMap& gt, const Mask& gt_mask);

// Sum over levels of the L1 distance between predicted and ground-truth masks.
double mask_loss(const MaskPyramid& pred, const MaskPyramid& gt);

// Reverse Huber on e = pred - target * mask with C = 0.2 * max|e|, summed.
double berhu_loss(const DepthMap& pred, const DepthMap& target, const Mask& mask);
// Same, on raw residuals.
double berhu_loss(const std::vector<double>& residuals);

// Mean binary cross-entropy on logits, numerically stable form.
double bce_loss(const Mask& logits, const Mask& target);

double total_loss(const LossParts& parts, const LossWeights& weights = {});

// Callback shape for an external perceptual-distance provider.
using PerceptualLossFn = std::function<double(const DepthMap& pred, const DepthMap& gt)>;

}  // namespace ods
