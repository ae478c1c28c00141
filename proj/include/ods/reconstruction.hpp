#pragma once

#include <optional>

#include "ods/geometry.hpp"
#include "ods/point_cloud.hpp"
#include "ods/raster.hpp"

namespace ods {

// Defaults for a ZED-class stereo camera when no metadata is supplied.
inline constexpr double kDefaultFocalPx = 700.0;
inline constexpr double kDefaultBaselineM = 0.12;

// Pinhole with the principal point at the image centre.
struct CameraIntrinsics {
    double f = kDefaultFocalPx;
    int width = 0;
    int height = 0;

    double cx() const { return width / 2.0; }
    double cy() const { return height / 2.0; }
    // Throws BadParams.
    void validate() const;
};

struct StereoRig {
    double baseline = kDefaultBaselineM;
    void validate() const;
};

// Single-channel disparity in pixels; non-positive or non-finite values are invalid.
class DisparityMap {
public:
    DisparityMap() = default;
    DisparityMap(int width, int height, float fill = -1.f) : values_(width, height, fill) {}
    explicit DisparityMap(Raster<float> values) : values_(std::move(values)) {}

    int width() const { return values_.width(); }
    int height() const { return values_.height(); }
    float& operator()(int x, int y) { return values_(x, y); }
    float operator()(int x, int y) const { return values_(x, y); }
    bool valid(int x, int y) const {
        const float d = values_(x, y);
        return std::isfinite(d) && d > 0.f;
    }
    const Raster<float>& values() const { return values_; }

private:
    Raster<float> values_;
};

// z = f * B / d. Throws ZeroDisparity for d <= 0.
double disparity_to_depth(double disparity, const CameraIntrinsics& intr, const StereoRig& rig);

// Source-camera frame as used by the capture: x right, y down, z forward.
// Throws NonPositiveDepth.
Point3 backproject(const PixelCoord& p, double z, const CameraIntrinsics& intr);
// Inverse of backproject; the point must lie in front of the camera.
PixelCoord project_to_source(const Point3& p, const CameraIntrinsics& intr);

// Alpha from the image's own alpha channel, in [0, 1].
Mask alpha_from_image(const PlanarImage& img);
// Binary alpha from disparity validity.
Mask alpha_from_validity(const DisparityMap& disp);

// One point per pixel with valid disparity and alpha > 0, positioned in the
// source-camera frame. Throws DimensionMismatch / EmptyObject.
PointCloud reconstruct_cloud(const PlanarImage& left, const DisparityMap& disp, const Mask& alpha,
                             const CameraIntrinsics& intr, const StereoRig& rig);

// Arithmetic centroid. Throws EmptyObject.
Point3 reference_point(const PointCloud& cloud);

// Rectilinear crop looking along `center` (theta/phi only) with horizontal FoV hfov.
// Throws BadFov when hfov is outside (0, pi).
PlanarImage extract_roi_perspective(const EquirectImage& pano, const SphericalCoord& center, double hfov,
                                    int out_width, int out_height);

}  // namespace ods
