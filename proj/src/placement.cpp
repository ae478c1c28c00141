#include "ods/placement.hpp"

#include <cmath>

#include "ods/error.hpp"

namespace ods {

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::PerColumn: return "per-column";
        case Strategy::KeyColumn: return "key-column";
        case Strategy::OneOff: return "one-off";
    }
    return "?";
}

const char* to_string(BlendMode b) { return b == BlendMode::Poisson ? "poisson" : "overwrite"; }

Strategy parse_strategy(const std::string& s) {
    if (s == "per-column") return Strategy::PerColumn;
    if (s == "key-column") return Strategy::KeyColumn;
    if (s == "one-off") return Strategy::OneOff;
    throw Error(ErrorCode::ParseError, "unknown strategy '" + s + "'");
}

BlendMode parse_blend(const std::string& s) {
    if (s == "overwrite") return BlendMode::Overwrite;
    if (s == "poisson") return BlendMode::Poisson;
    throw Error(ErrorCode::ParseError, "unknown blend mode '" + s + "'");
}

void PlacementSpec::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidPlacement, msg); };
    if (theta && !std::isfinite(*theta)) fail("theta must be finite");
    if (phi && !(std::isfinite(*phi) && std::abs(*phi) <= kPi / 2.0)) fail("phi must lie in [-90, 90] degrees");
    if (distance && !(*distance > 0.0 && std::isfinite(*distance))) fail("distance must be positive");
    if (!(transform.scale > 0.0 && std::isfinite(transform.scale))) fail("scale must be positive");
    if (!std::isfinite(transform.yaw) || !transform.translation.finite()) fail("yaw and translation must be finite");
    if (strategy == Strategy::KeyColumn && (key_columns < 1 || key_columns % 2 == 0)) {
        fail("key-column count must be odd and >= 1");
    }
}

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += m[static_cast<size_t>(i * 3 + k)] * o.m[static_cast<size_t>(k * 3 + j)];
            r.m[static_cast<size_t>(i * 3 + j)] = s;
        }
    }
    return r;
}

double Mat3::determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 Mat3::inverse() const {
    const double det = determinant();
    if (std::abs(det) < 1e-300) throw Error(ErrorCode::BadParams, "singular placement matrix");
    Mat3 r;
    r.m = {(m[4] * m[8] - m[5] * m[7]) / det, (m[2] * m[7] - m[1] * m[8]) / det, (m[1] * m[5] - m[2] * m[4]) / det,
           (m[5] * m[6] - m[3] * m[8]) / det, (m[0] * m[8] - m[2] * m[6]) / det, (m[2] * m[3] - m[0] * m[5]) / det,
           (m[3] * m[7] - m[4] * m[6]) / det, (m[1] * m[6] - m[0] * m[7]) / det, (m[0] * m[4] - m[1] * m[3]) / det};
    return r;
}

Mat3 Mat3::from(const Rotation3& r) {
    Mat3 out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out.m[static_cast<size_t>(i * 3 + j)] = r(i, j);
    }
    return out;
}

ObjectPlacement::ObjectPlacement(const Point3& source_reference, const PlacementSpec& spec) {
    spec.validate();
    const Point3 ref = flip_y(source_reference);
    const SphericalCoord ref_dir = to_spherical(ref);
    const double theta = spec.theta.value_or(ref_dir.theta);
    const double phi = spec.phi.value_or(ref_dir.phi);
    const double distance = spec.distance.value_or(ref_dir.rho);

    const Rotation3 to_axis = rotation_about_x(ref_dir.phi).transposed() * rotation_about_y(ref_dir.theta).transposed();
    const Rotation3 orbit = rotation_about_y(theta) * rotation_about_x(phi) * to_axis;
    const Mat3 yaw_scaled = Mat3::from(rotation_about_y(spec.transform.yaw)) *
                            Mat3::diagonal(spec.transform.scale, spec.transform.scale, spec.transform.scale);

    linear_ = Mat3::from(orbit) * yaw_scaled * Mat3::diagonal(1.0, -1.0, 1.0);
    inverse_ = linear_.inverse();
    const Point3 unit = direction_of(theta, phi);
    offset_ = orbit * (ref - yaw_scaled * ref) + unit * (distance - ref_dir.rho) + spec.transform.translation;
    world_reference_ = to_world(source_reference);
}

PointCloud ObjectPlacement::place(const PointCloud& source_cloud) const {
    PointCloud out = source_cloud;
    for (auto& pt : out.points) pt.position = to_world(pt.position);
    return out;
}

}  // namespace ods
