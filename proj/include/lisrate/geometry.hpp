#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace lisrate {

// One square LIS unit in the z = 0 plane. Antenna m = i * side + j sits at
// x index i, y index j of a cell-centered lattice.
struct AntennaGrid {
    Vec2 center;
    double half_length = 0.0;  // L
    int num_antennas = 0;      // M
    int side = 0;              // sqrt(M)
    double spacing = 0.0;      // delta L
    double wavelength = 0.0;
    std::vector<Vec3> antenna_positions;
};

struct Device {
    Vec3 position;
    int index = 0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct Box {
    Interval x;
    Interval y;
    Interval z;
};

inline AntennaGrid build_grid(Vec2 center, double L, int M, double lambda) {
    long long side = 0;
    if (!is_perfect_square(M, &side)) {
        throw std::invalid_argument("antenna count " + std::to_string(M) + " is not a perfect square");
    }
    if (!(L > 0.0)) throw std::invalid_argument("half length L must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("wavelength must be positive");

    AntennaGrid g;
    g.center = center;
    g.half_length = L;
    g.num_antennas = M;
    g.side = static_cast<int>(side);
    g.spacing = 2.0 * L / static_cast<double>(side);
    g.wavelength = lambda;
    g.antenna_positions.reserve(static_cast<std::size_t>(M));
    for (int i = 0; i < g.side; ++i) {
        double x = center.x - L + (i + 0.5) * g.spacing;
        for (int j = 0; j < g.side; ++j) {
            double y = center.y - L + (j + 0.5) * g.spacing;
            g.antenna_positions.push_back({x, y, 0.0});
        }
    }
    return g;
}

inline double distance(const Vec3& a, const Vec3& b) {
    double dx = a.x - b.x;
    double dy = a.y - b.y;
    double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// LOS amplitude: sqrt(cos theta) antenna gain times free-space loss,
// so beta^2 = z / (4 pi d^3)
inline double los_gain(const Device& dev, const Vec3& antenna) {
    double d = distance(dev.position, antenna);
    double z = dev.position.z - antenna.z;
    return std::sqrt(z / (4.0 * kPi * d * d * d));
}

inline RVector los_gains(const Device& dev, const AntennaGrid& grid) {
    RVector beta(grid.num_antennas);
    for (int m = 0; m < grid.num_antennas; ++m) beta[m] = los_gain(dev, grid.antenna_positions[m]);
    return beta;
}

// Square lattice with pitch d_m starting at the range minima. The target
// (0, 0, z) is always present; it is injected when the lattice misses it
// and is listed first either way.
inline std::vector<Device> place_devices_grid(double d_m, Interval xr, Interval yr, double z) {
    if (!(d_m > 0.0)) throw std::invalid_argument("device spacing must be positive");
    if (xr.hi < xr.lo || yr.hi < yr.lo) throw std::invalid_argument("empty placement range");
    const double eps = 1e-9 * std::max(1.0, d_m);
    auto count = [&](const Interval& r) { return static_cast<int>(std::floor((r.hi - r.lo + eps) / d_m)) + 1; };
    int nx = count(xr);
    int ny = count(yr);

    std::vector<Device> out;
    out.push_back({{0.0, 0.0, z}, 0});
    for (int i = 0; i < nx; ++i) {
        double x = xr.lo + i * d_m;
        for (int j = 0; j < ny; ++j) {
            double y = yr.lo + j * d_m;
            if (std::abs(x) < eps && std::abs(y) < eps) continue;
            out.push_back({{x, y, z}, static_cast<int>(out.size())});
        }
    }
    return out;
}

// K i.i.d. uniform positions; a draw is redone when the device sits closer
// than min_distance to the center of its own unit (directly below it).
inline std::vector<Device> place_devices_uniform(int K, const Box& box, std::uint64_t seed,
                                                 double min_distance = 1.0) {
    if (K < 1) throw std::invalid_argument("need at least one device");
    if (!(box.z.hi > box.z.lo)) throw std::invalid_argument("box z extent must be positive");
    if (box.x.hi < box.x.lo || box.y.hi < box.y.lo) throw std::invalid_argument("empty box");
    if (box.z.hi < min_distance) {
        throw std::invalid_argument("box cannot satisfy the minimum device distance");
    }
    auto gen = make_stream(seed, StreamTag::placement, {});
    std::uniform_real_distribution<double> ux(box.x.lo, box.x.hi);
    std::uniform_real_distribution<double> uy(box.y.lo, box.y.hi);
    std::uniform_real_distribution<double> uz(box.z.lo, box.z.hi);

    std::vector<Device> out;
    out.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        Vec3 p;
        int tries = 0;
        do {
            if (++tries > 1000000) throw std::runtime_error("rejection sampling for device placement failed");
            p = {ux(gen), uy(gen), uz(gen)};
        } while (p.z < min_distance);
        out.push_back({p, k});
    }
    return out;
}

}  // namespace lisrate
