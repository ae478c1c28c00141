#include "ods/segmentation.hpp"

#include <algorithm>
#include <string>

#include "ods/error.hpp"

namespace ods {

double viewing_direction(int i, int n) {
    if (n < 1 || i < 0 || i >= n) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "segment " + std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
    }
    return kTwoPi * i / n - kPi;
}

namespace {

int interval_of(double theta, int n) {
    const int i = static_cast<int>(std::floor((theta + kPi) * n / kTwoPi));
    return std::clamp(i, 0, n - 1);
}

}  // namespace

std::vector<ViewSegment> segment_cloud(const PointCloud& cloud, int n) {
    if (n < 1) throw Error(ErrorCode::BadParams, "segment count must be >= 1");
    if (cloud.empty()) throw Error(ErrorCode::EmptyObject, "cannot segment an empty cloud");

    std::vector<std::vector<uint32_t>> buckets(static_cast<size_t>(n));
    for (uint32_t k = 0; k < cloud.size(); ++k) {
        const auto s = to_spherical(cloud.points[k].position);
        buckets[static_cast<size_t>(interval_of(s.theta, n))].push_back(k);
    }
    std::vector<ViewSegment> out;
    for (int i = 0; i < n; ++i) {
        auto& b = buckets[static_cast<size_t>(i)];
        if (b.empty()) continue;
        ViewSegment seg;
        seg.index = i;
        seg.theta_lo = viewing_direction(i, n);
        seg.theta_hi = seg.theta_lo + kTwoPi / n;
        seg.camera_theta = seg.theta_lo + kPi / n;
        seg.point_indices = std::move(b);
        out.push_back(std::move(seg));
    }
    return out;
}

CameraPair camera_pair_for_direction(double theta, const StereoRig& rig) {
    const Rotation3 r = rotation_about_y(theta);
    CameraPair pair;
    pair.theta = theta;
    pair.left = {r, r * Point3{-rig.baseline / 2.0, 0.0, 0.0}};
    pair.right = {r, r * Point3{rig.baseline / 2.0, 0.0, 0.0}};
    return pair;
}

CameraPair camera_pair(int i, int n, const StereoRig& rig) {
    return camera_pair_for_direction(viewing_direction(i, n) + kPi / n, rig);
}

ViewIntrinsics ViewIntrinsics::square(int size, double hfov) {
    if (size <= 0) throw Error(ErrorCode::BadParams, "raster size must be positive");
    if (!(hfov > 0.0 && hfov < kPi)) throw Error(ErrorCode::BadFov, "hfov must lie in (0, pi)");
    ViewIntrinsics v;
    v.width = size;
    v.height = size;
    v.f = (size / 2.0) / std::tan(hfov / 2.0);
    v.row_scale = v.f;
    v.elev_top = (size / 2.0) / v.f;
    return v;
}

ViewIntrinsics ViewIntrinsics::covering(double hfov, double px_per_rad_h, double elev_lo, double elev_hi,
                                        double px_per_rad_v) {
    if (!(hfov > 0.0 && hfov < kPi)) throw Error(ErrorCode::BadFov, "hfov must lie in (0, pi)");
    if (!(px_per_rad_h > 0.0 && px_per_rad_v > 0.0) || !(elev_hi > elev_lo)) {
        throw Error(ErrorCode::BadParams, "invalid view raster densities or elevation window");
    }
    ViewIntrinsics v;
    v.f = px_per_rad_h;
    const int half = static_cast<int>(std::ceil(v.f * std::tan(hfov / 2.0)));
    v.width = 2 * std::max(half, 1);
    v.row_scale = px_per_rad_v;
    v.elev_top = elev_hi;
    v.height = std::max(1, static_cast<int>(std::ceil((elev_hi - elev_lo) * px_per_rad_v)));
    return v;
}

AzimuthIndex::AzimuthIndex(const PointCloud& cloud) {
    sorted_.reserve(cloud.size());
    for (uint32_t k = 0; k < cloud.size(); ++k) {
        sorted_.emplace_back(to_spherical(cloud.points[k].position).theta, k);
    }
    std::sort(sorted_.begin(), sorted_.end());
}

std::vector<uint32_t> AzimuthIndex::query(double lo, double hi) const {
    std::vector<uint32_t> out;
    if (!(hi > lo)) return out;
    auto take = [&](double a, double b) {
        auto first = std::lower_bound(sorted_.begin(), sorted_.end(), std::pair<double, uint32_t>{a, 0});
        auto last = std::lower_bound(sorted_.begin(), sorted_.end(), std::pair<double, uint32_t>{b, 0});
        for (auto it = first; it < last; ++it) out.push_back(it->second);
    };
    if (hi - lo >= kTwoPi) {
        take(-kPi, kPi);
        return out;
    }
    const double start = wrap_angle(lo);
    const double end = start + (hi - lo);
    if (end <= kPi) {
        take(start, end);
    } else {
        take(start, kPi);
        take(-kPi, end - kTwoPi);
    }
    return out;
}

DepthMap splat_points(const PointCloud& cloud, const std::vector<uint32_t>& indices, const CameraPose& pose,
                      const ViewIntrinsics& intr) {
    DepthMap map(intr.width, intr.height);
    for (const uint32_t k : indices) {
        const CloudPoint& pt = cloud.points[k];
        const Point3 q = pose.to_camera(pt.position);
        if (!(q.z > 0.0)) continue;
        const PixelCoord px = intr.project(q);
        const double fx = std::floor(px.col);
        const double fy = std::floor(px.row);
        if (fx < 0.0 || fy < 0.0 || fx >= intr.width || fy >= intr.height) continue;
        const int x = static_cast<int>(fx);
        const int y = static_cast<int>(fy);
        const auto z = static_cast<float>(q.z);
        if (!map.valid(x, y) || z < map.depth(x, y)) map.set(x, y, z, pt.alpha);
    }
    return map;
}

SparseProjection project_segment(const PointCloud& cloud, const AzimuthIndex& index, const ViewSegment& seg,
                                 const CameraPair& pair, const ViewIntrinsics& intr, double neighbor_margin) {
    const double needed = seg.width() + 2.0 * neighbor_margin;
    if (intr.hfov() + 1e-12 < needed) {
        throw Error(ErrorCode::FovTooNarrow, "view FoV " + std::to_string(rad_to_deg(intr.hfov())) +
                                                 " deg is narrower than the required " +
                                                 std::to_string(rad_to_deg(needed)) + " deg");
    }
    const auto indices = index.query(seg.theta_lo - neighbor_margin, seg.theta_hi + neighbor_margin);
    SparseProjection out;
    out.left = splat_points(cloud, indices, pair.left, intr);
    out.right = splat_points(cloud, indices, pair.right, intr);
    out.segment = seg;
    out.intr = intr;
    out.pair = pair;
    return out;
}

SparseProjection project_segment(const PointCloud& cloud, const ViewSegment& seg, const CameraPair& pair,
                                 const ViewIntrinsics& intr, double neighbor_margin) {
    return project_segment(cloud, AzimuthIndex(cloud), seg, pair, intr, neighbor_margin);
}

}  // namespace ods
