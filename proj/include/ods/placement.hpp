#pragma once

#include <array>
#include <optional>
#include <string>

#include "ods/geometry.hpp"
#include "ods/point_cloud.hpp"

namespace ods {

enum class Strategy { PerColumn, KeyColumn, OneOff };
enum class BlendMode { Overwrite, Poisson };

const char* to_string(Strategy s);
const char* to_string(BlendMode b);
// Accepts "per-column", "key-column", "one-off". Throws ParseError.
Strategy parse_strategy(const std::string& s);
BlendMode parse_blend(const std::string& s);

inline constexpr int kDefaultKeyColumns = 11;

// Where and how the object goes into the target scene. Unset direction or
// distance keep the object where it was captured.
struct PlacementSpec {
    std::optional<double> theta;     // radians, azimuth of the object centre
    std::optional<double> phi;       // radians, elevation of the object centre
    std::optional<double> distance;  // metres
    PoseTransform transform;         // scale / yaw about the reference, translation in world
    Strategy strategy = Strategy::PerColumn;
    int key_columns = kDefaultKeyColumns;
    BlendMode blend = BlendMode::Overwrite;

    // Throws InvalidPlacement.
    void validate() const;
};

struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    Point3 operator*(const Point3& p) const {
        return {m[0] * p.x + m[1] * p.y + m[2] * p.z, m[3] * p.x + m[4] * p.y + m[5] * p.z,
                m[6] * p.x + m[7] * p.y + m[8] * p.z};
    }
    Mat3 operator*(const Mat3& o) const;
    double determinant() const;
    Mat3 inverse() const;
    static Mat3 from(const Rotation3& r);
    static Mat3 diagonal(double a, double b, double c) { return {{a, 0, 0, 0, b, 0, 0, 0, c}}; }
};

// Affine map from the capture frame (image-aligned, y down) into the y-up world.
//
// The object is scaled and yawed about its reference point, orbited about the
// origin until the reference sits at (theta, phi), pushed out to `distance`,
// then translated.
class ObjectPlacement {
public:
    ObjectPlacement() = default;
    ObjectPlacement(const Point3& source_reference, const PlacementSpec& spec);

    Point3 to_world(const Point3& source) const { return linear_ * source + offset_; }
    Point3 to_source(const Point3& world) const { return inverse_ * (world - offset_); }
    PointCloud place(const PointCloud& source_cloud) const;

    const Point3& world_reference() const { return world_reference_; }

private:
    Mat3 linear_;
    Mat3 inverse_;
    Point3 offset_{};
    Point3 world_reference_{};
};

// Image-aligned capture frame to y-up world frame (and back; it is an involution).
constexpr Point3 flip_y(const Point3& p) { return {p.x, -p.y, p.z}; }

}  // namespace ods
