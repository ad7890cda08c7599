#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lisrate {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
// rounded so that 3 GHz gives lambda = 0.1 m exactly
inline constexpr double kSpeedOfLight = 3.0e8;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// (mean, variance) of a scalar random quantity
struct MomentPair {
    double mean = 0.0;
    double variance = 0.0;
};

// sample moments with their standard errors
struct MomentStats {
    double mean = 0.0;
    double variance = 0.0;
    double mean_se = 0.0;
    double variance_se = 0.0;
    std::size_t n = 0;

    MomentPair pair() const { return {mean, variance}; }
};

// error classes map onto distinct CLI exit codes
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool is_perfect_square(long long m, long long* root = nullptr) {
    if (m < 1) return false;
    auto r = static_cast<long long>(std::llround(std::sqrt(static_cast<double>(m))));
    while (r * r > m) --r;
    while ((r + 1) * (r + 1) <= m) ++r;
    if (root) *root = r;
    return r * r == m;
}

inline double wavelength_from_carrier(double carrier_hz) {
    if (!(carrier_hz > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
    return kSpeedOfLight / carrier_hz;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace lisrate
