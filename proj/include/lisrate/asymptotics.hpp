#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "mc_engine.hpp"

namespace lisrate {

enum class SumMode { asymptotic, finite };

// surface integrals behind the limits of sum beta^2 and sum beta^4
inline double p_k(double z, double L) {
    return std::atan(L * L / (z * std::sqrt(2.0 * L * L + z * z)));
}

// Integral of z^2 / (x^2 + y^2 + z^2)^3 over [-L, L]^2.
inline double q_k(double z, double L) {
    const double L2 = L * L, z2 = z * z;
    const double a = L2 + z2;
    return L2 / (a * (2.0 * L2 + z2)) + L * (2.0 * L2 + 3.0 * z2) / (z2 * a * std::sqrt(a)) * std::atan(L / std::sqrt(a));
}

inline double p_bar(double z, double L, double spacing) {
    double p = p_k(z, L);
    double d2 = spacing * spacing;
    return p * p / (kPi * kPi * d2 * d2);
}

inline double q_bar(double z, double L, double spacing) {
    return q_k(z, L) / (16.0 * kPi * kPi * spacing * spacing);
}

struct LinkMoments {
    Complex mu_L;
    double s_L = 0.0;
    double s_N1 = 0.0;
    double s_N2 = 0.0;
    double mean_Y = 0.0;
    double var_Y = 0.0;

    double s() const { return s_L + s_N1 + s_N2; }
};

struct RateMoments {
    double mean = 0.0;
    double variance = 0.0;
    bool clamped = false;  // second-order variance came out negative

    MomentPair pair() const { return {mean, variance}; }
};

struct Theorem1Result {
    MomentPair I;
    MomentPair gamma;
    RateMoments rate;
};

// Theorem 2 bound in nats, or unbounded when no LOS interference survives
struct RateBound {
    double nats = std::numeric_limits<double>::infinity();

    static RateBound unbounded() { return {}; }
    bool is_unbounded() const { return std::isinf(nats); }
};

namespace detail {

inline const Cell& los_cell(const Drop& drop, int k) {
    const Cell& c = drop.cell(k);
    if (!c.los_desired() || !c.grid) {
        throw std::domain_error("closed forms need a LOS desired link on an LIS unit");
    }
    return c;
}

inline const InterferenceLink& find_link(const Cell& c, int j) {
    for (const auto& il : c.interferers)
        if (il.source == j) return il;
    throw std::out_of_range("no link from device " + std::to_string(j) + " in cell " + std::to_string(c.k));
}

inline double los_share(double kappa) { return std::isinf(kappa) ? 1.0 : kappa / (kappa + 1.0); }
inline double nlos_share(double kappa) { return std::isinf(kappa) ? 0.0 : 1.0 / (kappa + 1.0); }

}  // namespace detail

inline double sum_beta2(const Device& dev, const AntennaGrid& grid) { return los_gains(dev, grid).squaredNorm(); }

inline double sum_beta4(const Device& dev, const AntennaGrid& grid) {
    return los_gains(dev, grid).array().pow(4).sum();
}

// X_k: mean sum beta^4, variance its square
inline MomentPair lemma1_moments(const AntennaGrid& grid, const Device& dev, SumMode mode = SumMode::finite) {
    double q = mode == SumMode::finite ? sum_beta4(dev, grid)
                                       : q_bar(dev.position.z, grid.half_length, grid.spacing);
    return {q, q * q};
}

// Z_k
inline MomentPair lemma3_moments(const AntennaGrid& grid, const Device& dev, double tau,
                                 SumMode mode = SumMode::finite) {
    check_tau(tau);
    double p2, q;
    if (mode == SumMode::finite) {
        RVector b = los_gains(dev, grid);
        p2 = b.squaredNorm();
        q = b.array().pow(4).sum();
    } else {
        p2 = std::sqrt(p_bar(dev.position.z, grid.half_length, grid.spacing));
        q = q_bar(dev.position.z, grid.half_length, grid.spacing);
    }
    return {p2, tau * tau * (2.0 - tau * tau) * q};
}

// Y_jk
inline LinkMoments lemma2_moments(const Drop& drop, int j, int k) {
    if (j == k) throw std::invalid_argument("lemma 2 needs j != k");
    const Cell& c = detail::los_cell(drop, k);
    const InterferenceLink& il = detail::find_link(c, j);
    const double tau = drop.tau[static_cast<std::size_t>(k)];
    const double t2 = tau * tau;
    const double kap = il.link.kappa;
    const CVector& h = c.desired.los;
    const RVector bk2 = h.cwiseAbs2();

    LinkMoments lm;
    const double ls = detail::los_share(kap);
    const double ns = detail::nlos_share(kap);
    if (kap > 0.0) {
        lm.mu_L = std::sqrt(ls * (1.0 - t2)) * h.dot(il.link.h_los);
        lm.s_L = ls * t2 * bk2.dot(il.link.h_los.cwiseAbs2());
    }
    if (il.link.R.cols() > 0 && ns > 0.0) {
        lm.s_N1 = ns * (1.0 - t2) * il.link.R.adjoint_apply(h).squaredNorm();
        lm.s_N2 = ns * t2 * bk2.dot(il.link.R.row_power());
    }
    const double s = lm.s();
    const double m2 = std::norm(lm.mu_L);
    lm.mean_Y = s + m2;
    lm.var_Y = s * s + 2.0 * m2 * s;
    return lm;
}

namespace detail {

inline Complex mu_c(const Cell& c, const InterferenceLink& il, double tau) {
    if (!(il.link.kappa > 0.0)) return 0.0;
    return std::sqrt(los_share(il.link.kappa) * (1.0 - tau * tau)) * c.desired.los.dot(il.link.h_los);
}

// mu_a for source t: sqrt(tau^2 kappa/(kappa+1)) beta_km beta_tm h_tkm
inline CVector mu_a(const Cell& c, const InterferenceLink& il, double tau) {
    const double w = std::sqrt(tau * tau * los_share(il.link.kappa));
    return w * c.desired.los.cwiseAbs().cast<Complex>().cwiseProduct(il.link.h_los);
}

}  // namespace detail

inline double omega_bar(const Drop& drop, int i, int j, int k) {
    if (i == j || i == k || j == k) throw std::invalid_argument("omega needs distinct i, j, k");
    const Cell& c = detail::los_cell(drop, k);
    const double tau = drop.tau[static_cast<std::size_t>(k)];
    const auto& li = detail::find_link(c, i);
    const auto& lj = detail::find_link(c, j);
    if (!(li.link.kappa > 0.0) || !(lj.link.kappa > 0.0) || tau == 0.0) return 0.0;
    Complex inner = detail::mu_a(c, li, tau).dot(detail::mu_a(c, lj, tau));  // sum conj(a_i) a_j
    return 2.0 * std::real(detail::mu_c(c, li, tau) * std::conj(detail::mu_c(c, lj, tau)) * inner);
}

// sum over ordered pairs i != j of rho_i rho_j omega_ijk, in O(K M)
inline double omega_sum(const Drop& drop, int k) {
    const Cell& c = detail::los_cell(drop, k);
    const double tau = drop.tau[static_cast<std::size_t>(k)];
    if (tau == 0.0) return 0.0;
    CVector u = CVector::Zero(c.num_antennas());
    double diag = 0.0;
    for (const auto& il : c.interferers) {
        if (!(il.link.kappa > 0.0)) continue;
        const double r = drop.rho[static_cast<std::size_t>(il.source)];
        Complex mc = detail::mu_c(c, il, tau);
        CVector a = detail::mu_a(c, il, tau);
        u += (r * std::conj(mc)) * a;
        diag += r * r * std::norm(mc) * a.squaredNorm();
    }
    // sum_{i,j} rho_i rho_j mu_ci mu_cj^* sum_m a_im^* a_jm = ||u||^2
    return 2.0 * (u.squaredNorm() - diag);
}

// I_k
inline MomentPair lemma4_moments(const Drop& drop, int k, SumMode mode = SumMode::asymptotic) {
    const Cell& c = detail::los_cell(drop, k);
    const Device& dev = drop.devices[static_cast<std::size_t>(k)];
    const double tau = drop.tau[static_cast<std::size_t>(k)];
    const double rho = drop.rho[static_cast<std::size_t>(k)];
    const double t2 = tau * tau;
    const MomentPair z = lemma3_moments(*c.grid, dev, tau, mode);
    const double q = lemma1_moments(*c.grid, dev, mode).mean;

    double mean = rho * t2 * q + z.mean;
    double var = rho * rho * t2 * t2 * q * q + z.variance;
    for (const auto& il : c.interferers) {
        const double r = drop.rho[static_cast<std::size_t>(il.source)];
        LinkMoments lm = lemma2_moments(drop, il.source, k);
        mean += r * lm.mean_Y;
        var += r * r * lm.var_Y;
    }
    var += omega_sum(drop, k);
    return {mean, std::max(var, 0.0)};
}

// second-order Taylor moments of gamma = C / I
inline MomentPair sinr_moments(double S, double rho, double tau, const MomentPair& I) {
    if (!(I.mean > 0.0)) throw std::invalid_argument("interference mean must be positive");
    const double C = rho * S * (1.0 - tau * tau);
    const double m = I.mean, v = I.variance;
    const double m2 = m * m;
    MomentPair g;
    g.mean = C * (1.0 / m + v / (m2 * m));
    g.variance = C * C * (v / (m2 * m2) - v * v / (m2 * m2 * m2));
    return g;
}

inline RateMoments rate_moments(const MomentPair& gamma) {
    if (!(gamma.mean >= 0.0)) throw std::invalid_argument("SINR mean must be nonnegative");
    const double a = 1.0 + gamma.mean;
    const double a2 = a * a;
    RateMoments r;
    r.mean = std::log(a) - gamma.variance / (2.0 * a2);
    double v = gamma.variance / a2 - gamma.variance * gamma.variance / (4.0 * a2 * a2);
    if (v < 0.0) {
        r.clamped = true;
        v = 0.0;
    }
    r.variance = v;
    return r;
}

inline Theorem1Result theorem1(const Drop& drop, int k, SumMode mode = SumMode::asymptotic) {
    const Cell& c = detail::los_cell(drop, k);
    const Device& dev = drop.devices[static_cast<std::size_t>(k)];
    double S;
    if (mode == SumMode::finite) {
        double p = sum_beta2(dev, *c.grid);
        S = p * p;
    } else {
        S = p_bar(dev.position.z, c.grid->half_length, c.grid->spacing);
    }
    Theorem1Result t;
    t.I = lemma4_moments(drop, k, mode);
    t.gamma = sinr_moments(S, drop.rho[static_cast<std::size_t>(k)], drop.tau[static_cast<std::size_t>(k)], t.I);
    t.rate = rate_moments(t.gamma);
    return t;
}

inline double mu_hat_I(const Drop& drop, int k) {
    const Cell& c = drop.cell(k);
    const double tau = drop.tau[static_cast<std::size_t>(k)];
    const double M = static_cast<double>(c.num_antennas());
    double s = 0.0;
    for (const auto& il : c.interferers) {
        if (!(il.link.kappa > 0.0)) continue;
        const double r = drop.rho[static_cast<std::size_t>(il.source)];
        s += r * detail::los_share(il.link.kappa) * (1.0 - tau * tau) / (M * M) *
             std::norm(c.desired.los.dot(il.link.h_los));
    }
    return s;
}

inline RateBound theorem2_bound(const Drop& drop, int k) {
    const double mu = mu_hat_I(drop, k);
    if (!(mu > 0.0)) return RateBound::unbounded();
    const Cell& c = detail::los_cell(drop, k);
    const double tau = drop.tau[static_cast<std::size_t>(k)];
    const double rho = drop.rho[static_cast<std::size_t>(k)];
    const double L = c.grid->half_length;
    const double p = p_k(drop.devices[static_cast<std::size_t>(k)].position.z, L);
    return {std::log1p(p * p * rho * (1.0 - tau * tau) / (16.0 * L * L * L * L * kPi * kPi * mu))};
}

}  // namespace lisrate
