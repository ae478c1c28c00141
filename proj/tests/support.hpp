#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ods/geometry.hpp"
#include "ods/raster.hpp"

namespace ods::test {

// Small seeded generator for property tests.
class Gen {
public:
    explicit Gen(uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
    uint8_t byte() { return static_cast<uint8_t>(integer(0, 255)); }

    // Log-uniform magnitude in [lo, hi], random direction.
    Point3 point(double lo, double hi) {
        Point3 d;
        double n = 0.0;
        do {
            d = {uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
            n = d.norm();
        } while (n < 1e-3 || n > 1.0);
        const double r = std::exp(uniform(std::log(lo), std::log(hi)));
        return d * (r / n);
    }

    // theta in [-pi, pi), phi strictly inside (-pi/2, pi/2).
    SphericalCoord direction(double max_phi = 1.5) {
        return {uniform(-kPi, kPi), uniform(-max_phi, max_phi), 1.0};
    }

    Rgba8 colour() { return {byte(), byte(), byte(), 255}; }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace ods::test
