#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "core.hpp"

namespace lisrate {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// stream tags keep the different consumers of randomness apart
enum class StreamTag : std::uint64_t {
    placement = 1,
    los_state = 2,
    path_angles = 3,
    estimation_error = 4,
    fading = 5,
    desired_fading = 6,
};

// Derives an independent generator for (master seed, tag, ids...). The
// result depends only on the arguments, never on which worker asks.
inline std::mt19937_64 make_stream(std::uint64_t master, StreamTag tag,
                                   std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = splitmix64(master ^ 0x6c69737261746531ULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
    for (auto id : ids) h = splitmix64(h ^ (id + 0x632be59bd9b4e019ULL));
    return std::mt19937_64(h);
}

// standard circularly-symmetric complex Gaussian, E|z|^2 = 1
class ComplexNormal {
public:
    Complex operator()(std::mt19937_64& gen) {
        double re = normal_(gen);
        double im = normal_(gen);
        return {re * kInvSqrt2, im * kInvSqrt2};
    }

    void fill(std::mt19937_64& gen, Complex* out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out[i] = (*this)(gen);
    }

private:
    static constexpr double kInvSqrt2 = 0.70710678118654752440;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lisrate
