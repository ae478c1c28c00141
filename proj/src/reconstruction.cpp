#include "ods/reconstruction.hpp"

#include <string>

#include "ods/error.hpp"

namespace ods {

void CameraIntrinsics::validate() const {
    if (!(f > 0.0) || !std::isfinite(f)) throw Error(ErrorCode::BadParams, "focal length must be positive");
    if (width <= 0 || height <= 0) throw Error(ErrorCode::BadParams, "camera raster must be non-empty");
}

void StereoRig::validate() const {
    if (!(baseline > 0.0) || !std::isfinite(baseline)) throw Error(ErrorCode::BadParams, "baseline must be positive");
}

double disparity_to_depth(double disparity, const CameraIntrinsics& intr, const StereoRig& rig) {
    if (!(disparity > 0.0)) throw Error(ErrorCode::ZeroDisparity, "disparity must be positive");
    return intr.f * rig.baseline / disparity;
}

Point3 backproject(const PixelCoord& p, double z, const CameraIntrinsics& intr) {
    if (!(z > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "backprojection needs positive depth");
    return {(p.col - intr.cx()) * z / intr.f, (p.row - intr.cy()) * z / intr.f, z};
}

PixelCoord project_to_source(const Point3& p, const CameraIntrinsics& intr) {
    return {intr.f * p.x / p.z + intr.cx(), intr.f * p.y / p.z + intr.cy()};
}

Mask alpha_from_image(const PlanarImage& img) {
    Mask m(img.width(), img.height());
    for (size_t i = 0; i < img.size(); ++i) m[i] = img[i].a / 255.f;
    return m;
}

Mask alpha_from_validity(const DisparityMap& disp) {
    Mask m(disp.width(), disp.height());
    for (int y = 0; y < disp.height(); ++y) {
        for (int x = 0; x < disp.width(); ++x) m(x, y) = disp.valid(x, y) ? 1.f : 0.f;
    }
    return m;
}

PointCloud reconstruct_cloud(const PlanarImage& left, const DisparityMap& disp, const Mask& alpha,
                             const CameraIntrinsics& intr, const StereoRig& rig) {
    intr.validate();
    rig.validate();
    if (!left.same_shape(disp.width(), disp.height()) || !left.same_shape(alpha) ||
        !left.same_shape(intr.width, intr.height)) {
        throw Error(ErrorCode::DimensionMismatch, "image, disparity, alpha and intrinsics must share dimensions");
    }
    PointCloud cloud;
    for (int y = 0; y < disp.height(); ++y) {
        for (int x = 0; x < disp.width(); ++x) {
            const float a = alpha(x, y);
            if (!disp.valid(x, y) || !(a > 0.f)) continue;
            const PixelCoord px{x + 0.5, y + 0.5};
            const double z = disparity_to_depth(disp(x, y), intr, rig);
            CloudPoint pt;
            pt.position = backproject(px, z, intr);
            pt.color = left(x, y);
            pt.alpha = std::min(a, 1.f);
            pt.source_pixel = px;
            cloud.points.push_back(pt);
        }
    }
    if (cloud.empty()) throw Error(ErrorCode::EmptyObject, "no pixel has both valid disparity and alpha > 0");
    return cloud;
}

Point3 reference_point(const PointCloud& cloud) {
    if (cloud.empty()) throw Error(ErrorCode::EmptyObject, "reference point of an empty cloud");
    // Kahan-compensated so large clouds stay within 1e-9 of the exact mean.
    Point3 sum{}, comp{};
    for (const auto& pt : cloud.points) {
        const Point3 y = pt.position - comp;
        const Point3 t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(cloud.size());
}

PlanarImage extract_roi_perspective(const EquirectImage& pano, const SphericalCoord& center, double hfov,
                                    int out_width, int out_height) {
    if (!(hfov > 0.0 && hfov < kPi)) throw Error(ErrorCode::BadFov, "hfov must lie in (0, pi)");
    if (out_width <= 0 || out_height <= 0) throw Error(ErrorCode::BadParams, "crop size must be positive");
    const double f = (out_width / 2.0) / std::tan(hfov / 2.0);
    const Rotation3 rot = rotation_about_y(center.theta) * rotation_about_x(center.phi);
    PlanarImage out(out_width, out_height);
    for (int j = 0; j < out_height; ++j) {
        for (int i = 0; i < out_width; ++i) {
            const Point3 ray{(i + 0.5 - out_width / 2.0) / f, -(j + 0.5 - out_height / 2.0) / f, 1.0};
            const SphericalCoord dir = to_spherical(rot * ray);
            const PixelCoord px = equirect_pixel_of(dir, pano.width(), pano.height());
            out(i, j) = to_rgba8(sample_rgba_wrap(pano, px.col, px.row));
        }
    }
    return out;
}

}  // namespace ods
