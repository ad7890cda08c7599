#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "asymptotics.hpp"
#include "experiments.hpp"
#include "mc_engine.hpp"

// Cross-checks between the Monte-Carlo engine and the closed forms. Shared
// by the `validate` subcommand and the acceptance suite.
namespace lisrate::validation {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// |mc - ref| <= n_se * se
inline CheckResult within_se(const std::string& name, double mc, double se, double ref, double n_se = 3.0) {
    CheckResult r;
    r.name = name;
    double z = se > 0.0 ? std::abs(mc - ref) / se : (mc == ref ? 0.0 : INFINITY);
    r.passed = z <= n_se;
    r.detail = "mc=" + fmt(mc) + " ref=" + fmt(ref) + " se=" + fmt(se) + " z=" + fmt(z);
    return r;
}

// one-sample Kolmogorov-Smirnov statistic against Exp(1)
inline double ks_exponential(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double D = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double F = 1.0 - std::exp(-x[i]);
        D = std::max({D, std::abs(F - i / n), std::abs((i + 1) / n - F)});
    }
    return D;
}

// asymptotic 1% critical value of the KS statistic
inline double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

struct Shape {
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

inline Shape sample_shape(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

inline double relative_gap(double a, double b) {
    double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

// Decomposed SINR versus the raw matched-filter receiver on random drops,
// plus the batched engine against the per-sample path.
inline std::vector<CheckResult> check_dual_path(int n_cases, std::uint64_t seed, double tol = 1e-10) {
    std::mt19937_64 gen(seed);
    const int sides[] = {2, 4, 8, 12, 16};
    double worst = 0.0, worst_batch = 0.0;
    int batch_cases = 0;
    for (int t = 0; t < n_cases; ++t) {
        ScenarioConfig c;
        const int side = sides[std::uniform_int_distribution<int>(0, 4)(gen)];
        const int M = side * side;
        c.m_grid = {M};
        c.K = std::uniform_int_distribution<int>(1, 10)(gen);
        c.scenario = static_cast<ScenarioKind>(std::uniform_int_distribution<int>(0, 2)(gen));
        c.mode = static_cast<InterferenceMode>(std::uniform_int_distribution<int>(0, 2)(gen));
        c.tau = std::uniform_int_distribution<int>(0, 4)(gen) == 0 ? 0.0 : std::uniform_real_distribution<double>(0.0, 0.95)(gen);
        c.L = std::uniform_real_distribution<double>(0.05, 1.0)(gen);
        c.seed = gen();
        c.paths = std::uniform_int_distribution<int>(0, 1)(gen) ? 0 : std::uniform_int_distribution<int>(1, 12)(gen);
        if (c.scenario == ScenarioKind::grid_plane) {
            c.d_m = std::uniform_real_distribution<double>(2.0, 6.0)(gen);
            c.plane_half_extent = 10.0;
        }
        Drop drop = make_drop(c, static_cast<std::uint64_t>(t), M);
        const std::uint64_t r = gen() % 1000;
        FadingRealization f = draw_fading(drop, c.target, c.seed, r);
        double g1 = sinr_sample(drop, f, c.target).gamma;
        double g2 = sinr_direct(drop, f, c.target);
        worst = std::max(worst, relative_gap(g1, g2));
        if (t % 50 == 0) {
            McReport mc = run_monte_carlo(drop, c.target, 40, c.seed);
            for (std::size_t i = 0; i < 40; ++i) {
                FadingRealization fi = draw_fading(drop, c.target, c.seed, i);
                worst_batch = std::max(worst_batch, relative_gap(mc.samples.gamma[i], sinr_sample(drop, fi, c.target).gamma));
            }
            ++batch_cases;
        }
    }
    return {
        {"decomposed vs direct SINR", worst <= tol, "cases=" + std::to_string(n_cases) + " worst rel=" + fmt(worst)},
        {"batched vs per-sample SINR", worst_batch <= tol,
         "cases=" + std::to_string(batch_cases) + " worst rel=" + fmt(worst_batch)},
    };
}

inline ScenarioConfig lemma_scenario(int M, double tau, int K, std::uint64_t seed) {
    ScenarioConfig c;
    c.scenario = ScenarioKind::uniform_room;
    c.mode = InterferenceMode::probabilistic;
    c.K = K;
    c.m_grid = {M};
    c.tau = tau;
    c.seed = seed;
    return c;
}

// MC moments of X, Z and every Y against the closed forms, plus the KS test
// for X / sum beta^4 ~ Exp(1).
inline std::vector<CheckResult> check_lemmas(int M, double tau, std::size_t n_real, std::uint64_t seed, int K = 5,
                                             int workers = 1) {
    ScenarioConfig c = lemma_scenario(M, tau, K, seed);
    Drop drop = make_drop(c, 0, M);
    McOptions mo;
    mo.workers = workers;
    McReport mc = run_monte_carlo(drop, 0, n_real, seed, mo);
    const Cell& cell = drop.cell(0);
    const Device& dev = drop.devices[0];
    std::vector<CheckResult> out;

    MomentPair X = lemma1_moments(*cell.grid, dev, SumMode::finite);
    out.push_back(within_se("X mean", mc.X.mean, mc.X.mean_se, X.mean));
    out.push_back(within_se("X variance", mc.X.variance, mc.X.variance_se, X.variance));
    MomentPair Z = lemma3_moments(*cell.grid, dev, tau, SumMode::finite);
    out.push_back(within_se("Z mean", mc.Z.mean, mc.Z.mean_se, Z.mean));
    out.push_back(within_se("Z variance", mc.Z.variance, mc.Z.variance_se, Z.variance));
    for (std::size_t l = 0; l < mc.Y.size(); ++l) {
        const int j = mc.Y_source[l];
        LinkMoments lm = lemma2_moments(drop, j, 0);
        std::string tag = "Y[" + std::to_string(j) + (cell.interferers[l].link.kappa > 0 ? ",los]" : ",nlos]");
        out.push_back(within_se(tag + " mean", mc.Y[l].mean, mc.Y[l].mean_se, lm.mean_Y));
        out.push_back(within_se(tag + " variance", mc.Y[l].variance, mc.Y[l].variance_se, lm.var_Y));
    }
    std::vector<double> xn(mc.samples.X);
    for (double& v : xn) v /= X.mean;
    double D = ks_exponential(xn);
    double crit = ks_critical_1pct(xn.size());
    out.push_back({"X chi-square(2) KS", D < crit, "D=" + fmt(D) + " crit=" + fmt(crit)});
    return out;
}

// Sample covariance of Y_ik, Y_jk against omega for random LOS-bearing pairs.
inline std::vector<CheckResult> check_covariance(int M, std::size_t n_real, std::uint64_t seed, int n_pairs = 5,
                                                 int workers = 1) {
    // the first drop with at least four LOS-bearing interferers
    ScenarioConfig c = lemma_scenario(M, 0.5, 8, seed);
    Drop drop;
    std::vector<int> los_links;
    for (std::uint64_t d = 0; d < 1000; ++d) {
        drop = make_drop(c, d, M);
        los_links.clear();
        const Cell& cell = drop.cell(0);
        for (std::size_t l = 0; l < cell.interferers.size(); ++l)
            if (cell.interferers[l].link.kappa > 0.0) los_links.push_back(static_cast<int>(l));
        if (los_links.size() >= 4) break;
    }
    if (los_links.size() < 2) return {{"covariance drop", false, "no drop with LOS-bearing pairs"}};

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t a = 0; a < los_links.size(); ++a)
        for (std::size_t b = a + 1; b < los_links.size(); ++b) pairs.emplace_back(los_links[a], los_links[b]);
    std::mt19937_64 gen(seed ^ 0xc0ffeeULL);
    std::shuffle(pairs.begin(), pairs.end(), gen);
    if (static_cast<int>(pairs.size()) > n_pairs) pairs.resize(static_cast<std::size_t>(n_pairs));

    McOptions mo;
    mo.workers = workers;
    McReport mc = run_monte_carlo(drop, 0, n_real, seed, mo);
    const Cell& cell = drop.cell(0);
    std::vector<CheckResult> out;
    std::vector<double> yi(n_real), yj(n_real);
    for (auto [a, b] : pairs) {
        for (std::size_t r = 0; r < n_real; ++r) {
            yi[r] = mc.samples.Y(static_cast<Eigen::Index>(r), a);
            yj[r] = mc.samples.Y(static_cast<Eigen::Index>(r), b);
        }
        CovarianceStats cs = sample_covariance(yi, yj);
        const int i = cell.interferers[static_cast<std::size_t>(a)].source;
        const int j = cell.interferers[static_cast<std::size_t>(b)].source;
        double w = omega_bar(drop, i, j, 0);
        out.push_back(within_se("cov(Y" + std::to_string(i) + ",Y" + std::to_string(j) + ")", cs.cov, cs.se, w));
    }
    return out;
}

// Shape of the normalized NLOS-error term tau b e^H R g / sqrt(s_N2).
inline std::vector<CheckResult> check_clt(int M, std::size_t n, std::uint64_t seed, double max_skew = 0.1,
                                          double max_kurt = 0.2) {
    ScenarioConfig c = lemma_scenario(M, 0.5, 2, seed);
    c.mode = InterferenceMode::nlos_only;
    Drop drop = make_drop(c, 0, M);
    const Cell& cell = drop.cell(0);
    const auto& link = cell.interferers.at(0).link;
    const double tau = drop.tau[0];
    const double sN2 = lemma2_moments(drop, cell.interferers[0].source, 0).s_N2;
    const double w = tau * link.nlos_weight() / std::sqrt(sN2);

    std::vector<double> re(n), im(n);
    const std::size_t block = 64;
    for (std::size_t r0 = 0; r0 < n; r0 += block) {
        const std::size_t B = std::min(block, n - r0);
        CMatrix E(M, static_cast<Eigen::Index>(B));
        std::vector<CVector> g(B);
        for (std::size_t b = 0; b < B; ++b) {
            FadingRealization f = draw_fading(drop, 0, seed, r0 + b);
            E.col(static_cast<Eigen::Index>(b)) = f.e;
            g[b] = f.g[0];
        }
        CMatrix RE = link.R.adjoint_apply(E);
        for (std::size_t b = 0; b < B; ++b) {
            Complex v = w * RE.col(static_cast<Eigen::Index>(b)).dot(g[b]);
            re[r0 + b] = v.real();
            im[r0 + b] = v.imag();
        }
    }
    std::vector<CheckResult> out;
    for (int part = 0; part < 2; ++part) {
        Shape s = sample_shape(part == 0 ? re : im);
        std::string tag = part == 0 ? "real" : "imag";
        bool ok = std::abs(s.skewness) < max_skew && std::abs(s.excess_kurtosis) < max_kurt;
        out.push_back({"Y_N2 shape (" + tag + ")", ok,
                       "skew=" + fmt(s.skewness) + " excess kurtosis=" + fmt(s.excess_kurtosis)});
    }
    return out;
}

}  // namespace lisrate::validation
