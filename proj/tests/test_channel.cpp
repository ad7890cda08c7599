#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "lisrate/channel.hpp"
#include "lisrate/rng.hpp"

using namespace lisrate;

namespace {

PathSet random_paths(int P, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    return draw_path_set(P, gen);
}

CVector random_cvector(int n, std::mt19937_64& gen) {
    ComplexNormal cn;
    CVector v(n);
    for (int i = 0; i < n; ++i) v[i] = cn(gen);
    return v;
}

}  // namespace

TEST(LosChannel, SingleAntennaPhaseWraps) {
    AntennaGrid g = build_grid({0, 0}, 0.25, 1, 0.1);
    g.antenna_positions[0] = {0, 0, 0};
    CVector h = los_channel({{0, 0, 1}, 0}, g);
    EXPECT_NEAR(h[0].real(), 1.0 / std::sqrt(4 * M_PI), 1e-12);
    EXPECT_NEAR(h[0].imag(), 0.0, 1e-12);
}

TEST(LosChannel, ModulusIsLosGainAndPhaseIsDistance) {
    AntennaGrid g = build_grid({0.3, -0.1}, 0.25, 64, 0.1);
    Device dev{{0.4, 0.9, 1.7}, 0};
    CVector h = los_channel(dev, g);
    for (int m = 0; m < 64; ++m) {
        EXPECT_NEAR(std::abs(h[m]), los_gain(dev, g.antenna_positions[m]), 1e-15);
        double d = distance(dev.position, g.antenna_positions[m]);
        std::complex<double> ph = h[m] / std::abs(h[m]);
        EXPECT_NEAR(std::abs(ph - std::exp(std::complex<double>(0, -2 * M_PI * d / 0.1))), 0.0, 1e-9);
    }
}

TEST(LosChannel, PowerMatchesClosedFormAtLargeM) {
    AntennaGrid g = build_grid({0, 0}, 0.25, 10000, 0.1);
    double s = los_channel({{0, 0, 1}, 0}, g).squaredNorm();
    double p = std::atan(0.0625 / std::sqrt(2 * 0.0625 + 1.0));
    double ref = p / (M_PI * g.spacing * g.spacing);
    EXPECT_LT(std::abs(s - ref) / ref, 0.01);
}

TEST(UpaSteering, BroadsideIsFlat) {
    CVector d = upa_steering(0, 0, 49, 0.05, 0.1);
    for (int m = 0; m < 49; ++m) EXPECT_NEAR(std::abs(d[m] - 1.0 / 7.0), 0.0, 1e-15);
    EXPECT_NEAR(d.norm(), 1.0, 1e-14);
}

TEST(UpaSteering, UnitModulusEntries) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-M_PI / 2, M_PI / 2);
    for (int t = 0; t < 50; ++t) {
        CVector d = upa_steering(u(gen), u(gen), 144, 0.05, 0.1);
        EXPECT_NEAR(d.norm(), 1.0, 1e-12);
        for (int m = 0; m < 144; ++m) EXPECT_NEAR(std::abs(d[m]), 1.0 / 12.0, 1e-14);
    }
}

TEST(UpaSteering, HandExpandedKronecker) {
    // M=4, spacing lambda/2, elevation pi/2: d_v = [1, e^{j pi}], d_h = [1, 1]
    CVector d = upa_steering(M_PI / 2, 0.0, 4, 0.05, 0.1);
    std::complex<double> e = std::exp(std::complex<double>(0, M_PI));
    std::complex<double> expect[4] = {0.5, 0.5, 0.5 * e, 0.5 * e};
    for (int m = 0; m < 4; ++m) EXPECT_NEAR(std::abs(d[m] - expect[m]), 0.0, 1e-14);
    EXPECT_THROW(upa_steering(0, 0, 5, 0.05, 0.1), std::invalid_argument);
}

TEST(UlaSteering, Examples) {
    CVector d0 = ula_steering(0.0, 8, 0.05, 0.1);
    for (int m = 0; m < 8; ++m) EXPECT_NEAR(std::abs(d0[m] - 1.0 / std::sqrt(8.0)), 0.0, 1e-15);
    CVector d = ula_steering(M_PI / 2, 2, 0.05, 0.1);
    EXPECT_NEAR(d[0].real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(d[1].real(), -1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(d[1].imag(), 0.0, 1e-15);
    for (double th : {-1.2, 0.3, 1.5}) EXPECT_NEAR(ula_steering(th, 37, 0.05, 0.1).norm(), 1.0, 1e-13);
}

TEST(PathSet, GainInUnitInterval) {
    PathSet ps = random_paths(500, 11);
    for (int p = 0; p < ps.size(); ++p) {
        EXPECT_GT(ps.gain[p], 0.0);
        EXPECT_LE(ps.gain[p], 1.0);
        EXPECT_NEAR(ps.gain[p] * ps.gain[p], std::cos(ps.elevation[p]) * std::cos(ps.azimuth[p]), 1e-15);
        EXPECT_GT(ps.elevation[p], -M_PI / 2);
        EXPECT_LT(ps.elevation[p], M_PI / 2);
    }
}

TEST(CorrelationFactor, SinglePathBroadsideUnitDistance) {
    AntennaGrid g = build_grid({0, 0}, 0.25, 16, 0.1);
    PathSet ps = make_path_set({0.0}, {0.0});
    RVector l = RVector::Ones(16);
    CMatrix R = CorrelationFactor::upa(l, ps, 4, g.spacing, g.wavelength).to_dense();
    for (int m = 0; m < 16; ++m) EXPECT_NEAR(std::abs(R(m, 0) - 0.25), 0.0, 1e-15);
}

TEST(CorrelationFactor, EntryModulusAndDenseAgreement) {
    AntennaGrid g = build_grid({1, 2}, 0.25, 36, 0.1);
    Device dev{{-3, 4, 1.5}, 1};
    PathSet ps = random_paths(7, 5);
    CorrelationFactor cf = correlation_factor(dev, g, ps, 3.7);
    CMatrix R = cf.to_dense();
    for (int m = 0; m < 36; ++m) {
        double d = distance(dev.position, g.antenna_positions[m]);
        for (int p = 0; p < 7; ++p) {
            EXPECT_NEAR(std::abs(R(m, p)), ps.gain[p] * std::pow(d, -1.85) / 6.0, 1e-15);
            // column built independently from the steering vector
            CVector s = upa_steering(ps.elevation[p], ps.azimuth[p], 36, g.spacing, g.wavelength);
            EXPECT_NEAR(std::abs(R(m, p) - std::pow(d, -1.85) * ps.gain[p] * s[m]), 0.0, 1e-15);
        }
    }
}

TEST(CorrelationFactor, PathLossMatches37LogD) {
    AntennaGrid g = build_grid({0, 0}, 0.25, 1, 0.1);
    g.antenna_positions[0] = {0, 0, 0};
    RVector l = nlos_path_loss({{0, 0, 10}, 0}, g, 3.7);
    EXPECT_NEAR(l[0] * l[0], std::pow(10.0, -3.7), 1e-18);
    EXPECT_NEAR(-10 * std::log10(l[0] * l[0]), 37.0, 1e-12);
    // clamped below the minimum distance
    RVector lc = nlos_path_loss({{0, 0, 0.5}, 0}, g, 3.7);
    EXPECT_DOUBLE_EQ(lc[0], 1.0);
}

TEST(CorrelationFactor, ColumnNormsAndRowPower) {
    AntennaGrid g = build_grid({0, 0}, 0.3, 64, 0.1);
    Device dev{{2, 1, 1.2}, 3};
    PathSet ps = random_paths(20, 9);
    CorrelationFactor cf = correlation_factor(dev, g, ps, 3.7);
    CMatrix R = cf.to_dense();
    RVector l = nlos_path_loss(dev, g, 3.7);
    double lsum = l.array().square().sum();
    for (int p = 0; p < 20; ++p) {
        EXPECT_NEAR(R.col(p).squaredNorm(), ps.gain[p] * ps.gain[p] * lsum / 64.0, 1e-15);
        EXPECT_NEAR(cf.column_power()[p], R.col(p).squaredNorm(), 1e-15);
    }
    for (int m = 0; m < 64; ++m) EXPECT_NEAR(cf.row_power()[m], R.row(m).squaredNorm(), 1e-15);
    EXPECT_NEAR(cf.frobenius_sq(), R.squaredNorm(), 1e-14);
}

TEST(CorrelationFactor, FactoredProductsMatchDense) {
    std::mt19937_64 gen(21);
    for (int side : {1, 3, 8, 15}) {
        int M = side * side;
        AntennaGrid g = build_grid({0, 0}, 0.25, M, 0.1);
        Device dev{{1, -2, 1.4}, 1};
        PathSet ps = random_paths(std::max(1, M / 2), 100 + side);
        CorrelationFactor cf = correlation_factor(dev, g, ps, 3.7);
        CMatrix R = cf.to_dense();
        CVector x = random_cvector(cf.cols(), gen);
        EXPECT_LT((cf.apply(x) - R * x).norm(), 1e-13 * (R * x).norm() + 1e-300);
        CMatrix W(M, 5);
        for (int b = 0; b < 5; ++b) W.col(b) = random_cvector(M, gen);
        CMatrix ref = R.adjoint() * W;
        EXPECT_LT((cf.adjoint_apply(W) - ref).norm(), 1e-13 * ref.norm());
    }
}

TEST(CorrelationFactor, DeterministicGivenPaths) {
    AntennaGrid g = build_grid({0, 0}, 0.25, 25, 0.1);
    Device dev{{1, 1, 1}, 1};
    CMatrix a = correlation_factor(dev, g, random_paths(12, 4), 3.7).to_dense();
    CMatrix b = correlation_factor(dev, g, random_paths(12, 4), 3.7).to_dense();
    EXPECT_TRUE(a == b);
}

TEST(RicianChannel, Limits) {
    AntennaGrid g = build_grid({0, 0}, 0.25, 16, 0.1);
    Device dev{{2, 0, 1}, 1};
    RicianLink link;
    link.h_los = los_channel(dev, g);
    link.R = correlation_factor(dev, g, random_paths(8, 2), 3.7);
    std::mt19937_64 gen(5);
    CVector gv = random_cvector(8, gen);

    link.kappa = std::numeric_limits<double>::infinity();
    EXPECT_LT((rician_channel(link, gv) - link.h_los).norm(), 1e-15);
    link.kappa = 1e12;
    EXPECT_LT((rician_channel(link, gv) - link.h_los).norm(), 1e-6 * link.h_los.norm());
    link.kappa = 0.0;
    EXPECT_LT((rician_channel(link, gv) - link.R.apply(gv)).norm(), 1e-15);
    link.kappa = -1.0;
    EXPECT_THROW(rician_channel(link, gv), std::invalid_argument);
    link.kappa = 1.0;
    EXPECT_THROW(rician_channel(link, random_cvector(3, gen)), std::invalid_argument);
}

TEST(RicianChannel, BitwiseReproducible) {
    AntennaGrid g = build_grid({0, 0}, 0.25, 36, 0.1);
    Device dev{{2, 0, 1}, 1};
    RicianLink link{3.0, los_channel(dev, g), correlation_factor(dev, g, random_paths(18, 2), 3.7)};
    std::mt19937_64 gen(8);
    CVector gv = random_cvector(18, gen);
    CVector a = rician_channel(link, gv);
    CVector b = rician_channel(link, gv);
    EXPECT_TRUE(a == b);
}

TEST(RicianChannel, SampleMeanAndCovariance) {
    // mean sqrt(k/(k+1)) h_L and covariance R R^H / (k+1) over 1e5 draws
    const int M = 9, P = 4, n = 100000;
    AntennaGrid g = build_grid({0, 0}, 0.25, M, 0.1);
    Device dev{{1.5, 0.5, 1}, 1};
    const double kappa = 2.5;
    RicianLink link{kappa, los_channel(dev, g), correlation_factor(dev, g, random_paths(P, 13), 3.7)};
    CMatrix R = link.R.to_dense();
    CMatrix C = R * R.adjoint() / (kappa + 1.0);
    CVector mu = std::sqrt(kappa / (kappa + 1.0)) * link.h_los;

    auto gen = make_stream(77, StreamTag::fading, {0});
    ComplexNormal cn;
    CVector sum = CVector::Zero(M);
    std::vector<CVector> hs;
    hs.reserve(n);
    for (int i = 0; i < n; ++i) {
        CVector gv(P);
        cn.fill(gen, gv.data(), P);
        hs.push_back(rician_channel(link, gv));
        sum += hs.back();
    }
    CVector mean = sum / n;
    // every entry at a family-wise level (18 real comparisons, z <= 4)
    for (int m = 0; m < M; ++m) {
        double se = std::sqrt(C(m, m).real() / 2.0 / n);
        EXPECT_LT(std::abs(mean[m].real() - mu[m].real()), 4 * se) << m;
        EXPECT_LT(std::abs(mean[m].imag() - mu[m].imag()), 4 * se) << m;
    }
    // 3 standard errors on fixed projections u^H h: mean, variance, cross-covariance
    std::mt19937_64 ug(1234);
    CVector u1 = random_cvector(M, ug).normalized();
    CVector u2 = random_cvector(M, ug).normalized();
    std::vector<double> pr(n), pi(n), q1(n), q12(n);
    for (int i = 0; i < n; ++i) {
        std::complex<double> a1 = u1.dot(hs[i] - mu), a2 = u2.dot(hs[i] - mu);
        std::complex<double> b1 = u1.dot(hs[i]);
        pr[i] = b1.real();
        pi[i] = b1.imag();
        q1[i] = std::norm(a1);
        q12[i] = (a1 * std::conj(a2)).real();
    }
    auto check = [&](const std::vector<double>& x, double ref, const char* what) {
        double s1 = 0.0, s2 = 0.0;
        for (double v : x) {
            s1 += v;
            s2 += v * v;
        }
        double m1 = s1 / n;
        double se = std::sqrt((s2 / n - m1 * m1) / n);
        EXPECT_LT(std::abs(m1 - ref), 3 * se) << what;
    };
    std::complex<double> pm = u1.dot(mu);
    check(pr, pm.real(), "projected mean (real)");
    check(pi, pm.imag(), "projected mean (imag)");
    check(q1, u1.dot(C * u1).real(), "projected variance");
    check(q12, u1.dot(C * u2).real(), "projected cross-covariance");
    // second moment identity
    double e2 = 0.0, e4 = 0.0;
    for (const auto& h : hs) {
        e2 += h.squaredNorm();
        e4 += h.squaredNorm() * h.squaredNorm();
    }
    e2 /= n;
    double se = std::sqrt((e4 / n - e2 * e2) / n);
    double ref = kappa / (kappa + 1) * link.h_los.squaredNorm() + link.R.frobenius_sq() / (kappa + 1);
    EXPECT_LT(std::abs(e2 - ref), 3 * se);
}
