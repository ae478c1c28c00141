#include "ods/losses.hpp"

#include <algorithm>
#include <cmath>

#include "ods/error.hpp"

namespace ods {

namespace {

template <typename A, typename B>
void require_same(const A& a, const B& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw Error(ErrorCode::DimensionMismatch, what);
    }
}

double depth_or_zero(const DepthMap& m, size_t i) { return m.valid(i) ? m.depth(i) : 0.0; }

}  // namespace

void LossWeights::validate() const {
    if (lambda_r < 0 || lambda_m < 0 || lambda_p < 0) throw Error(ErrorCode::BadParams, "loss weights must be >= 0");
    if (lambda_r == 0 && lambda_m == 0 && lambda_p == 0) throw Error(ErrorCode::BadParams, "loss weights all zero");
}

MaskPyramid build_mask_pyramid(const Mask& mask, int levels) {
    if (levels < 1) throw Error(ErrorCode::BadParams, "pyramid needs at least one level");
    MaskPyramid out{mask};
    for (int l = 1; l < levels; ++l) {
        const Mask& prev = out.back();
        const int w = std::max(1, prev.width() / 2);
        const int h = std::max(1, prev.height() / 2);
        Mask next(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                float s = 0.f;
                int n = 0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        if (prev.contains(2 * x + dx, 2 * y + dy)) {
                            s += prev(2 * x + dx, 2 * y + dy);
                            ++n;
                        }
                    }
                }
                next(x, y) = s / static_cast<float>(std::max(n, 1));
            }
        }
        out.push_back(std::move(next));
    }
    return out;
}

double reconstruction_loss(const DepthMap& pred, const DepthMap& gt, const Mask& gt_mask) {
    require_same(pred, gt, "reconstruction_loss: prediction and ground truth differ in size");
    require_same(pred, gt_mask, "reconstruction_loss: mask differs in size");
    double sq = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double r = depth_or_zero(gt, i) - depth_or_zero(pred, i) * gt_mask[i];
        sq += r * r;
    }
    return std::sqrt(sq);
}

double mask_loss(const MaskPyramid& pred, const MaskPyramid& gt) {
    if (pred.size() != gt.size()) throw Error(ErrorCode::DimensionMismatch, "mask_loss: scale counts differ");
    double total = 0.0;
    for (size_t l = 0; l < pred.size(); ++l) {
        require_same(pred[l], gt[l], "mask_loss: level resolutions differ");
        for (size_t i = 0; i < pred[l].size(); ++i) total += std::abs(static_cast<double>(gt[l][i]) - pred[l][i]);
    }
    return total;
}

double berhu_loss(const std::vector<double>& residuals) {
    double c = 0.0;
    for (const double e : residuals) c = std::max(c, std::abs(e));
    c *= 0.2;
    double total = 0.0;
    for (const double e : residuals) {
        const double a = std::abs(e);
        total += a <= c ? a : (e * e + c * c) / (2.0 * c);
    }
    return total;
}

double berhu_loss(const DepthMap& pred, const DepthMap& target, const Mask& mask) {
    require_same(pred, target, "berhu_loss: prediction and target differ in size");
    require_same(pred, mask, "berhu_loss: mask differs in size");
    std::vector<double> residuals(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) {
        residuals[i] = depth_or_zero(pred, i) - depth_or_zero(target, i) * mask[i];
    }
    return berhu_loss(residuals);
}

double bce_loss(const Mask& logits, const Mask& target) {
    require_same(logits, target, "bce_loss: logits and target differ in size");
    if (logits.empty()) return 0.0;
    double total = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        const double x = logits[i];
        const double g = target[i];
        total += std::max(x, 0.0) - x * g + std::log1p(std::exp(-std::abs(x)));
    }
    return total / static_cast<double>(logits.size());
}

double total_loss(const LossParts& parts, const LossWeights& weights) {
    return weights.lambda_r * parts.reconstruction + weights.lambda_m * parts.mask +
           weights.lambda_p * parts.perceptual;
}

}  // namespace ods
