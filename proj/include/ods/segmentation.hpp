#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ods/geometry.hpp"
#include "ods/point_cloud.hpp"
#include "ods/raster.hpp"
#include "ods/reconstruction.hpp"

namespace ods {

inline constexpr double kDefaultNeighborMarginRad = deg_to_rad(3.0);
inline constexpr double kMinViewFovRad = deg_to_rad(10.0);

// One azimuth interval of the placed cloud. `camera_theta` is where the
// segment's camera pair looks; for uniform segments it is the interval centre.
struct ViewSegment {
    int index = 0;
    double theta_lo = 0.0;
    double theta_hi = 0.0;
    double camera_theta = 0.0;
    std::vector<uint32_t> point_indices;

    double width() const { return theta_hi - theta_lo; }
};

struct CameraPose {
    Rotation3 rotation;  // camera-to-world
    Point3 center;

    Point3 to_camera(const Point3& world) const { return rotation.transposed() * (world - center); }
    Point3 to_world(const Point3& camera) const { return rotation * camera + center; }
};

struct CameraPair {
    CameraPose left;
    CameraPose right;
    double theta = 0.0;  // viewing direction shared by both cameras
};

// Left edge of interval i: 2*pi*i/N - pi. Throws IndexOutOfRange.
double viewing_direction(int i, int n);

// Partition by azimuth into N equal intervals; empty intervals are omitted.
// Throws EmptyObject / BadParams.
std::vector<ViewSegment> segment_cloud(const PointCloud& cloud, int n);

// Both cameras share R_y(theta); centres are R_y(theta) * (-+B/2, 0, 0).
CameraPair camera_pair_for_direction(double theta, const StereoRig& rig);
// Pair for interval i, aimed at the interval centre. Throws IndexOutOfRange.
CameraPair camera_pair(int i, int n, const StereoRig& rig);

// Per-view raster model: columns are perspective (u = cx + f x/z) and rows are
// uniform in the elevation angle atan2(y, z). Both eyes of a rectified pair see
// a point on the same row, and horizontal disparity is f*B/z.
struct ViewIntrinsics {
    double f = 0.0;          // horizontal focal length, px
    int width = 0;
    int height = 0;
    double row_scale = 0.0;  // px per radian of elevation
    double elev_top = 0.0;   // elevation at the top edge of row 0, radians

    double cx() const { return width / 2.0; }
    double hfov() const { return 2.0 * std::atan(cx() / f); }

    PixelCoord project(const Point3& camera_point) const {
        return {cx() + f * camera_point.x / camera_point.z,
                (elev_top - std::atan2(camera_point.y, camera_point.z)) * row_scale};
    }
    // Camera-frame ray through (u, v), normalised to z = 1.
    Point3 ray(double u, double v) const { return {(u - cx()) / f, std::tan(elev_top - v / row_scale), 1.0}; }

    // width x width raster with the given horizontal FoV, square pixels on the axis.
    static ViewIntrinsics square(int size, double hfov);
    // Raster covering `hfov` horizontally and [elev_lo, elev_hi] vertically at the
    // given angular densities.
    static ViewIntrinsics covering(double hfov, double px_per_rad_h, double elev_lo, double elev_hi,
                                   double px_per_rad_v);
};

struct SparseProjection {
    DepthMap left;
    DepthMap right;
    ViewSegment segment;
    ViewIntrinsics intr;
    CameraPair pair;
};

// Sorted azimuths for fast interval queries over a placed cloud.
class AzimuthIndex {
public:
    explicit AzimuthIndex(const PointCloud& cloud);
    // Indices of points whose azimuth lies in [lo, hi), with wrap-around.
    std::vector<uint32_t> query(double lo, double hi) const;

private:
    std::vector<std::pair<double, uint32_t>> sorted_;
};

// Projects the segment's points and every point within `neighbor_margin` of its
// interval into both eyes, keeping the nearest depth per pixel.
// Throws FovTooNarrow.
SparseProjection project_segment(const PointCloud& cloud, const ViewSegment& seg, const CameraPair& pair,
                                 const ViewIntrinsics& intr, double neighbor_margin);
SparseProjection project_segment(const PointCloud& cloud, const AzimuthIndex& index, const ViewSegment& seg,
                                 const CameraPair& pair, const ViewIntrinsics& intr, double neighbor_margin);

// Splats the listed points into one camera's raster with z-buffering.
DepthMap splat_points(const PointCloud& cloud, const std::vector<uint32_t>& indices, const CameraPose& pose,
                      const ViewIntrinsics& intr);

}  // namespace ods
