#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "channel.hpp"
#include "core.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace lisrate {

struct DesiredLink {
    CVector los;                            // h_kk for an LIS unit
    std::optional<CorrelationFactor> nlos;  // set for the MIMO baseline, where h_kk = R g
    RVector error_amplitude;                // per-antenna standard deviation of e_k
};

struct InterferenceLink {
    int source = -1;
    RicianLink link;
};

// everything the receiver of device k needs
struct Cell {
    int k = -1;
    std::optional<AntennaGrid> grid;  // empty for the MIMO baseline
    DesiredLink desired;
    std::vector<InterferenceLink> interferers;

    int num_antennas() const { return static_cast<int>(desired.error_amplitude.size()); }
    bool los_desired() const { return !desired.nlos.has_value(); }
};

struct Drop {
    std::uint64_t id = 0;
    std::vector<Device> devices;
    std::vector<double> rho;  // linear transmit SNR per device
    std::vector<double> tau;  // CSI imperfectness per device
    std::vector<std::optional<Cell>> cells;

    int size() const { return static_cast<int>(devices.size()); }

    const Cell& cell(int k) const {
        if (k < 0 || k >= size() || !cells[static_cast<std::size_t>(k)]) {
            throw std::out_of_range("device " + std::to_string(k) + " has no materialized cell in this drop");
        }
        return *cells[static_cast<std::size_t>(k)];
    }
};

struct FadingRealization {
    CVector e;               // estimation error
    std::vector<CVector> g;  // one per interferer, same order as Cell::interferers
    CVector g_desired;       // MIMO baseline only
};

struct SinrSample {
    double gamma = 0.0;
    double S = 0.0;
    double X = 0.0;
    double Z = 0.0;
    double I = 0.0;
    std::vector<double> Y;
};

inline void check_tau(double tau) {
    if (!(tau >= 0.0) || !(tau < 1.0)) throw std::invalid_argument("tau must lie in [0, 1)");
}

inline CVector estimated_channel(const CVector& h, double tau, const CVector& e) {
    check_tau(tau);
    if (h.size() != e.size()) throw std::invalid_argument("channel and error lengths differ");
    return h + std::sqrt(tau * tau / (1.0 - tau * tau)) * e;
}

inline FadingRealization draw_fading(const Drop& drop, int k, std::uint64_t seed, std::uint64_t realization) {
    const Cell& c = drop.cell(k);
    const auto dk = static_cast<std::uint64_t>(k);
    ComplexNormal cn;
    FadingRealization f;
    {
        auto gen = make_stream(seed, StreamTag::estimation_error, {drop.id, dk, realization});
        f.e.resize(c.num_antennas());
        for (int m = 0; m < c.num_antennas(); ++m) f.e[m] = c.desired.error_amplitude[m] * cn(gen);
    }
    f.g.resize(c.interferers.size());
    for (std::size_t l = 0; l < c.interferers.size(); ++l) {
        const auto& link = c.interferers[l];
        int P = link.link.R.cols();
        f.g[l].resize(P);
        if (P == 0) continue;
        ComplexNormal cnl;
        auto gen = make_stream(seed, StreamTag::fading, {drop.id, dk, realization, static_cast<std::uint64_t>(link.source)});
        cnl.fill(gen, f.g[l].data(), static_cast<std::size_t>(P));
    }
    if (c.desired.nlos) {
        ComplexNormal cnd;
        int P = c.desired.nlos->cols();
        f.g_desired.resize(P);
        auto gen = make_stream(seed, StreamTag::desired_fading, {drop.id, dk, realization});
        cnd.fill(gen, f.g_desired.data(), static_cast<std::size_t>(P));
    }
    return f;
}

inline CVector desired_channel(const Cell& c, const FadingRealization& f) {
    if (c.desired.nlos) return c.desired.nlos->apply(f.g_desired);
    return c.desired.los;
}

// SINR through the X / Y / Z decomposition
inline SinrSample sinr_sample(const Drop& drop, const FadingRealization& f, int k) {
    const Cell& c = drop.cell(k);
    const double tau = drop.tau[static_cast<std::size_t>(k)];
    const double rho = drop.rho[static_cast<std::size_t>(k)];
    check_tau(tau);
    const double a = std::sqrt(1.0 - tau * tau);

    CVector h = desired_channel(c, f);
    CVector w = a * h + tau * f.e;
    SinrSample s;
    double hn = h.squaredNorm();
    s.S = hn * hn;
    s.X = std::norm(f.e.dot(h));
    s.Z = w.squaredNorm();
    s.Y.resize(c.interferers.size());
    double interference = 0.0;
    for (std::size_t l = 0; l < c.interferers.size(); ++l) {
        const auto& il = c.interferers[l];
        // w^H h_j without forming h_j
        Complex v = 0.0;
        if (il.link.kappa > 0.0) v += il.link.los_weight() * w.dot(il.link.h_los);
        if (il.link.R.cols() > 0) v += il.link.nlos_weight() * il.link.R.adjoint_apply(w).dot(f.g[l]);
        s.Y[l] = std::norm(v);
        interference += drop.rho[static_cast<std::size_t>(il.source)] * s.Y[l];
    }
    s.I = rho * tau * tau * s.X + interference + s.Z;
    s.gamma = rho * s.S * (1.0 - tau * tau) / s.I;
    return s;
}

// SINR straight from the matched-filter receiver f = h + sqrt(tau^2/(1-tau^2)) e.
// The part of f^H h_kk carried by the estimation error counts as interference.
inline double sinr_direct(const Drop& drop, const FadingRealization& f, int k) {
    const Cell& c = drop.cell(k);
    const double tau = drop.tau[static_cast<std::size_t>(k)];
    const double rho = drop.rho[static_cast<std::size_t>(k)];
    CVector h = desired_channel(c, f);
    CVector fk = estimated_channel(h, tau, f.e);
    CVector delta = fk - h;
    double signal = rho * std::norm(h.dot(h));
    double denom = rho * std::norm(delta.dot(h)) + fk.squaredNorm();
    for (std::size_t l = 0; l < c.interferers.size(); ++l) {
        const auto& il = c.interferers[l];
        CVector hj = rician_channel(il.link, f.g[l]);
        denom += drop.rho[static_cast<std::size_t>(il.source)] * std::norm(fk.dot(hj));
    }
    return signal / denom;
}

inline double rate_sample(double gamma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("SINR must be nonnegative");
    return std::log1p(gamma);
}

namespace detail {

struct Neumaier {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

}  // namespace detail

inline MomentStats estimate_moments(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("need at least two samples");
    MomentStats m;
    m.n = n;
    auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) {
        m.mean = *lo;
        return m;
    }
    detail::Neumaier s1;
    for (double v : x) s1.add(v);
    const double mean = s1.value() / static_cast<double>(n);
    detail::Neumaier s2, s4;
    for (double v : x) {
        double d = v - mean;
        double d2 = d * d;
        s2.add(d2);
        s4.add(d2 * d2);
    }
    const double dn = static_cast<double>(n);
    const double var = s2.value() / (dn - 1.0);
    const double m4 = s4.value() / dn;
    m.mean = mean;
    m.variance = var;
    m.mean_se = std::sqrt(var / dn);
    // large-sample standard error of the unbiased variance
    double v4 = m4 - var * var * (dn - 3.0) / (dn - 1.0);
    m.variance_se = std::sqrt(std::max(v4, 0.0) / dn);
    return m;
}

struct CovarianceStats {
    double cov = 0.0;
    double se = 0.0;
};

inline CovarianceStats sample_covariance(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("covariance needs two equal-length samples");
    detail::Neumaier sx, sy;
    for (std::size_t i = 0; i < n; ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
    }
    const double dn = static_cast<double>(n);
    const double mx = sx.value() / dn, my = sy.value() / dn;
    detail::Neumaier sp, sp2;
    for (std::size_t i = 0; i < n; ++i) {
        double p = (x[i] - mx) * (y[i] - my);
        sp.add(p);
        sp2.add(p * p);
    }
    CovarianceStats c;
    c.cov = sp.value() / (dn - 1.0);
    double mp = sp.value() / dn;
    double vp = sp2.value() / dn - mp * mp;
    c.se = std::sqrt(std::max(vp, 0.0) / dn);
    return c;
}

struct McOptions {
    int workers = 1;
    // realizations per work item; fixed so the arithmetic never depends on
    // how many workers there are
    int block = 32;
};

struct McSamples {
    std::vector<double> rate, gamma, X, Z, I;
    Eigen::MatrixXd Y;  // realization x interferer
};

struct McReport {
    MomentStats rate, gamma, X, Z, I;
    std::vector<MomentStats> Y;
    std::vector<int> Y_source;
    McSamples samples;
};

namespace detail {

// batch version of sinr_sample for realizations [r0, r0 + B)
inline void mc_block(const Drop& drop, int k, std::uint64_t seed, std::size_t r0, std::size_t B, McSamples& out) {
    const Cell& c = drop.cell(k);
    const double tau = drop.tau[static_cast<std::size_t>(k)];
    const double rho = drop.rho[static_cast<std::size_t>(k)];
    const double a = std::sqrt(1.0 - tau * tau);
    const int M = c.num_antennas();
    const auto nb = static_cast<Eigen::Index>(B);
    const std::size_t nl = c.interferers.size();

    std::vector<FadingRealization> fad;
    fad.reserve(B);
    for (std::size_t b = 0; b < B; ++b) fad.push_back(draw_fading(drop, k, seed, r0 + b));

    CMatrix E(M, nb), H(M, nb);
    for (Eigen::Index b = 0; b < nb; ++b) {
        E.col(b) = fad[b].e;
        H.col(b) = desired_channel(c, fad[b]);
    }
    CMatrix W = a * H + tau * E;

    std::vector<double> interference(B, 0.0);
    for (std::size_t l = 0; l < nl; ++l) {
        const auto& il = c.interferers[l];
        const double rj = drop.rho[static_cast<std::size_t>(il.source)];
        CVector v = CVector::Zero(nb);
        if (il.link.kappa > 0.0) v += il.link.los_weight() * (W.adjoint() * il.link.h_los);
        if (il.link.R.cols() > 0) {
            CMatrix RW = il.link.R.adjoint_apply(W);
            const double bw = il.link.nlos_weight();
            for (Eigen::Index b = 0; b < nb; ++b) v[b] += bw * RW.col(b).dot(fad[b].g[l]);
        }
        for (Eigen::Index b = 0; b < nb; ++b) {
            double y = std::norm(v[b]);
            out.Y(static_cast<Eigen::Index>(r0) + b, static_cast<Eigen::Index>(l)) = y;
            interference[b] += rj * y;
        }
    }
    for (Eigen::Index b = 0; b < nb; ++b) {
        const std::size_t r = r0 + static_cast<std::size_t>(b);
        double hn = H.col(b).squaredNorm();
        double S = hn * hn;
        double X = std::norm(E.col(b).dot(H.col(b)));
        double Z = W.col(b).squaredNorm();
        double I = rho * tau * tau * X + interference[b] + Z;
        double g = rho * S * (1.0 - tau * tau) / I;
        if (!std::isfinite(g)) throw NumericalError("non-finite SINR sample");
        out.X[r] = X;
        out.Z[r] = Z;
        out.I[r] = I;
        out.gamma[r] = g;
        out.rate[r] = std::log1p(g);
    }
}

}  // namespace detail

inline McReport run_monte_carlo(const Drop& drop, int k, std::size_t n_real, std::uint64_t seed,
                                const McOptions& opt = {}) {
    if (n_real < 2) throw std::invalid_argument("need at least two realizations");
    const Cell& c = drop.cell(k);
    check_tau(drop.tau[static_cast<std::size_t>(k)]);
    const std::size_t nl = c.interferers.size();

    McReport rep;
    McSamples& s = rep.samples;
    s.rate.assign(n_real, 0.0);
    s.gamma.assign(n_real, 0.0);
    s.X.assign(n_real, 0.0);
    s.Z.assign(n_real, 0.0);
    s.I.assign(n_real, 0.0);
    s.Y.resize(static_cast<Eigen::Index>(n_real), static_cast<Eigen::Index>(nl));

    const std::size_t block = static_cast<std::size_t>(std::max(1, opt.block));
    const std::size_t nblocks = (n_real + block - 1) / block;
    parallel_for(nblocks, opt.workers, [&](std::size_t t) {
        std::size_t r0 = t * block;
        detail::mc_block(drop, k, seed, r0, std::min(block, n_real - r0), s);
    });

    rep.rate = estimate_moments(s.rate);
    rep.gamma = estimate_moments(s.gamma);
    rep.X = estimate_moments(s.X);
    rep.Z = estimate_moments(s.Z);
    rep.I = estimate_moments(s.I);
    std::vector<double> col(n_real);
    for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t r = 0; r < n_real; ++r) col[r] = s.Y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l));
        rep.Y.push_back(estimate_moments(col));
        rep.Y_source.push_back(c.interferers[l].source);
    }
    return rep;
}

}  // namespace lisrate
