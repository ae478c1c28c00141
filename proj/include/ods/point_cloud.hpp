#pragma once

#include <vector>

#include "ods/geometry.hpp"
#include "ods/raster.hpp"

namespace ods {

struct CloudPoint {
    Point3 position;
    Rgba8 color;
    float alpha = 1.f;  // [0, 1]
    PixelCoord source_pixel;
};

struct PointCloud {
    std::vector<CloudPoint> points;

    size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

// p -> R_y(yaw) * (scale * (p - reference)) + reference + translation.
// Throws BadScale when scale <= 0.
PointCloud apply_pose_transform(const PointCloud& cloud, const PoseTransform& t, const Point3& reference);
Point3 apply_pose_transform(const Point3& p, const PoseTransform& t, const Point3& reference);

}  // namespace ods
