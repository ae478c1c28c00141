#include "ods/geometry.hpp"

#include <algorithm>
#include <string>

#include "ods/error.hpp"

namespace ods {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::BadAspect: return "BadAspect";
        case ErrorCode::BadScale: return "BadScale";
        case ErrorCode::ZeroDisparity: return "ZeroDisparity";
        case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptyObject: return "EmptyObject";
        case ErrorCode::BadFov: return "BadFov";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::FovTooNarrow: return "FovTooNarrow";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::OutOfSource: return "OutOfSource";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::CountMismatch: return "CountMismatch";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidPlacement: return "InvalidPlacement";
    }
    return "Unknown";
}

Rotation3 Rotation3::from_rows(const std::array<double, 9>& m) {
    Rotation3 r(m);
    if (r.orthonormality_error() > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9) {
        throw Error(ErrorCode::BadParams, "matrix is not a proper rotation");
    }
    return r;
}

Rotation3 Rotation3::operator*(const Rotation3& o) const {
    std::array<double, 9> out{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += (*this)(r, k) * o(k, c);
            out[static_cast<size_t>(r * 3 + c)] = s;
        }
    }
    return Rotation3(out);
}

Rotation3 Rotation3::transposed() const {
    return Rotation3({m_[0], m_[3], m_[6], m_[1], m_[4], m_[7], m_[2], m_[5], m_[8]});
}

double Rotation3::determinant() const {
    return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) - m_[1] * (m_[3] * m_[8] - m_[5] * m_[6]) +
           m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
}

double Rotation3::orthonormality_error() const {
    double worst = 0.0;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += (*this)(k, r) * (*this)(k, c);
            worst = std::max(worst, std::abs(s - (r == c ? 1.0 : 0.0)));
        }
    }
    return worst;
}

double wrap_angle(double a) {
    double w = std::fmod(a + kPi, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    w -= kPi;
    // fmod can round up to exactly +pi
    if (w >= kPi) w -= kTwoPi;
    return w;
}

SphericalCoord to_spherical(const Point3& p) {
    const double rho = p.norm();
    if (!(rho >= 1e-12)) throw Error(ErrorCode::ZeroVector, "cannot take the direction of a zero vector");
    const double horizontal = std::hypot(p.x, p.z);
    SphericalCoord s;
    s.theta = horizontal == 0.0 ? 0.0 : std::atan2(p.x, p.z);
    if (s.theta >= kPi) s.theta = -kPi;
    s.phi = std::atan2(p.y, horizontal);
    s.rho = rho;
    return s;
}

Point3 direction_of(double theta, double phi) {
    const double c = std::cos(phi);
    return {c * std::sin(theta), std::sin(phi), c * std::cos(theta)};
}

Point3 from_spherical(const SphericalCoord& s) { return direction_of(s.theta, s.phi) * s.rho; }

PixelCoord equirect_pixel_of(const SphericalCoord& dir, int width, int height) {
    if (width <= 0 || height <= 0 || width != 2 * height) {
        throw Error(ErrorCode::BadAspect, "equirect raster must be 2:1, got " + std::to_string(width) +
                                              "x" + std::to_string(height));
    }
    PixelCoord px;
    px.col = (dir.theta + kPi) * width / kTwoPi;
    px.row = (kPi / 2.0 - dir.phi) * height / kPi;
    if (px.col >= width) px.col -= width;
    if (px.col < 0.0) px.col += width;
    return px;
}

double equirect_column_theta(int col, int width) { return (col + 0.5) * kTwoPi / width - kPi; }

double equirect_row_phi(int row, int height) { return kPi / 2.0 - (row + 0.5) * kPi / height; }

Rotation3 rotation_about_y(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return Rotation3({c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c});
}

Rotation3 rotation_about_x(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return Rotation3({1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c});
}

}  // namespace ods
