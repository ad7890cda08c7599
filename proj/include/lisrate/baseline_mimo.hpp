#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "channel.hpp"
#include "core.hpp"
#include "geometry.hpp"
#include "mc_engine.hpp"
#include "rng.hpp"

namespace lisrate {

struct UlaArray {
    int num_antennas = 0;
    double spacing = 0.0;
    double wavelength = 0.0;
};

inline UlaArray make_ula(int M, double lambda) {
    if (M < 1) throw std::invalid_argument("ULA needs at least one antenna");
    return {M, 0.5 * lambda, lambda};
}

struct MimoParams {
    double snr_linear = db_to_linear(3.0);
    double tau = 0.5;
    double path_loss_exponent = 3.7;
    double min_distance = 1.0;
    std::uint64_t drop_id = 0;
    std::vector<int> targets{0};  // receivers to materialize
};

// Single BS at the origin with a ULA; every link is pure NLOS with P = M/2
// paths, unit antenna gains and one distance per device.
inline Drop build_mimo_drop(const std::vector<Device>& devices, int M, double lambda, std::uint64_t seed,
                            const MimoParams& prm = {}) {
    if (M < 2 || M % 2 != 0) throw std::invalid_argument("MIMO baseline needs an even antenna count");
    check_tau(prm.tau);
    const UlaArray ula = make_ula(M, lambda);
    const int P = M / 2;
    const int K = static_cast<int>(devices.size());

    std::vector<CorrelationFactor> R(static_cast<std::size_t>(K));
    std::vector<double> loss(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) {
        double d = std::max(distance(devices[j].position, {0.0, 0.0, 0.0}), prm.min_distance);
        loss[j] = std::pow(d, -0.5 * prm.path_loss_exponent);
        auto gen = make_stream(seed, StreamTag::path_angles, {prm.drop_id, static_cast<std::uint64_t>(j), 0xB5ULL});
        std::uniform_real_distribution<double> u(-0.5 * kPi, 0.5 * kPi);
        CMatrix A(M, P);
        for (int p = 0; p < P; ++p) A.col(p) = loss[j] * ula_steering(u(gen), M, ula.spacing, lambda);
        R[j] = CorrelationFactor::dense(std::move(A));
        R[j].source = j;
    }

    Drop drop;
    drop.id = prm.drop_id;
    drop.devices = devices;
    drop.tau.assign(static_cast<std::size_t>(K), prm.tau);
    drop.rho.resize(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) {
        // mean per-antenna received power is l^2 P / M
        drop.rho[j] = prm.snr_linear * M / (loss[j] * loss[j] * P);
    }
    drop.cells.resize(static_cast<std::size_t>(K));
    for (int k : prm.targets) {
        if (k < 0 || k >= K) throw std::out_of_range("target device out of range");
        Cell c;
        c.k = k;
        c.desired.los = CVector::Zero(M);
        c.desired.nlos = R[k];
        c.desired.nlos->target = k;
        c.desired.error_amplitude = R[k].row_power().cwiseSqrt();
        for (int j = 0; j < K; ++j) {
            if (j == k) continue;
            InterferenceLink il;
            il.source = j;
            il.link.kappa = 0.0;
            il.link.h_los = CVector::Zero(M);
            il.link.R = R[j];
            il.link.R.target = k;
            c.interferers.push_back(std::move(il));
        }
        drop.cells[k] = std::move(c);
    }
    return drop;
}

}  // namespace lisrate
