#include "ods/point_cloud.hpp"

#include <cmath>

#include "ods/error.hpp"

namespace ods {

namespace {

void check_scale(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::BadScale, "scale must be positive");
}

}  // namespace

Point3 apply_pose_transform(const Point3& p, const PoseTransform& t, const Point3& reference) {
    check_scale(t.scale);
    return rotation_about_y(t.yaw) * ((p - reference) * t.scale) + reference + t.translation;
}

PointCloud apply_pose_transform(const PointCloud& cloud, const PoseTransform& t, const Point3& reference) {
    check_scale(t.scale);
    const Rotation3 r = rotation_about_y(t.yaw);
    PointCloud out = cloud;
    for (auto& pt : out.points) {
        pt.position = r * ((pt.position - reference) * t.scale) + reference + t.translation;
    }
    return out;
}

}  // namespace ods
