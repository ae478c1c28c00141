#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace ods {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }
constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }

// World frame: y up, forward is +z, theta measured from +z towards +x.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Point3 operator-() const { return {-x, -y, -z}; }
    constexpr Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Point3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Point3& operator+=(const Point3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr bool operator==(const Point3&) const = default;

    constexpr double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Point3 operator*(double s, const Point3& p) { return p * s; }

struct SphericalCoord {
    double theta = 0.0;  // azimuth, [-pi, pi)
    double phi = 0.0;    // elevation, [-pi/2, pi/2], positive up
    double rho = 1.0;
};

// Continuous raster coordinate; pixel (i, j) covers [i, i+1) x [j, j+1).
struct PixelCoord {
    double col = 0.0;
    double row = 0.0;
};

class Rotation3 {
public:
    Rotation3() = default;

    // Throws BadParams when the matrix is not a proper rotation.
    static Rotation3 from_rows(const std::array<double, 9>& m);

    static Rotation3 identity() { return Rotation3{}; }

    Point3 operator*(const Point3& p) const {
        return {m_[0] * p.x + m_[1] * p.y + m_[2] * p.z,
                m_[3] * p.x + m_[4] * p.y + m_[5] * p.z,
                m_[6] * p.x + m_[7] * p.y + m_[8] * p.z};
    }
    Rotation3 operator*(const Rotation3& o) const;
    Rotation3 transposed() const;

    double operator()(int r, int c) const { return m_[static_cast<size_t>(r * 3 + c)]; }
    double determinant() const;
    // Largest absolute deviation of R^T R from the identity.
    double orthonormality_error() const;

private:
    explicit Rotation3(const std::array<double, 9>& m) : m_(m) {}

    std::array<double, 9> m_{1, 0, 0, 0, 1, 0, 0, 0, 1};

    friend Rotation3 rotation_about_y(double angle);
    friend Rotation3 rotation_about_x(double angle);
};

struct PoseTransform {
    double scale = 1.0;
    double yaw = 0.0;  // radians about +y
    Point3 translation{};
};

// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

SphericalCoord to_spherical(const Point3& p);
Point3 from_spherical(const SphericalCoord& s);
// Unit direction for an azimuth / elevation pair.
Point3 direction_of(double theta, double phi);

PixelCoord equirect_pixel_of(const SphericalCoord& dir, int width, int height);
// Direction through the centre of equirect pixel (col, row).
double equirect_column_theta(int col, int width);
double equirect_row_phi(int row, int height);

Rotation3 rotation_about_y(double angle);
// Rotates +z towards +y by `angle` (elevation tilt).
Rotation3 rotation_about_x(double angle);

}  // namespace ods
