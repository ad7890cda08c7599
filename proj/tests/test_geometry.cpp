#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lisrate/asymptotics.hpp"
#include "lisrate/geometry.hpp"
#include "oracles.hpp"

using namespace lisrate;

TEST(BuildGrid, FourAntennasAtQuarterOffsets) {
    AntennaGrid g = build_grid({0, 0}, 0.25, 4, 0.1);
    EXPECT_DOUBLE_EQ(g.spacing, 0.25);
    ASSERT_EQ(g.antenna_positions.size(), 4u);
    std::set<std::pair<double, double>> pts;
    for (const auto& p : g.antenna_positions) {
        EXPECT_DOUBLE_EQ(std::abs(p.x), 0.125);
        EXPECT_DOUBLE_EQ(std::abs(p.y), 0.125);
        EXPECT_EQ(p.z, 0.0);
        pts.insert({p.x, p.y});
    }
    EXPECT_EQ(pts.size(), 4u);
}

TEST(BuildGrid, HundredAntennasAtHalfWavelength) {
    AntennaGrid g = build_grid({0, 0}, 0.25, 100, 0.1);
    EXPECT_NEAR(g.spacing, 0.05, 1e-15);
    EXPECT_NEAR(g.spacing, g.wavelength / 2, 1e-15);
}

TEST(BuildGrid, RejectsBadInput) {
    EXPECT_THROW(build_grid({0, 0}, 0.25, 5, 0.1), std::invalid_argument);
    EXPECT_THROW(build_grid({0, 0}, 0.0, 4, 0.1), std::invalid_argument);
    EXPECT_THROW(build_grid({0, 0}, 0.25, 4, -0.1), std::invalid_argument);
}

TEST(BuildGrid, LatticeInvariants) {
    for (int M : {1, 9, 64, 400}) {
        Vec2 c{1.5, -2.0};
        double L = 0.3;
        AntennaGrid g = build_grid(c, L, M, 0.1);
        int side = static_cast<int>(std::lround(std::sqrt(M)));
        EXPECT_EQ(g.side, side);
        EXPECT_NEAR(M, std::pow(2 * L / g.spacing, 2), 1e-9);
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j) {
                const Vec3& p = g.antenna_positions[i * side + j];
                EXPECT_GE(p.x, c.x - L);
                EXPECT_LE(p.x, c.x + L);
                EXPECT_GE(p.y, c.y - L);
                EXPECT_LE(p.y, c.y + L);
                // pitch spacing in both directions
                EXPECT_NEAR(p.x - g.antenna_positions[0].x, i * g.spacing, 1e-12);
                EXPECT_NEAR(p.y - g.antenna_positions[0].y, j * g.spacing, 1e-12);
            }
    }
}

TEST(BuildGrid, SymmetricAboutCenter) {
    Vec2 c{0.7, 0.2};
    AntennaGrid g = build_grid(c, 0.25, 36, 0.1);
    auto has = [&](double x, double y) {
        return std::any_of(g.antenna_positions.begin(), g.antenna_positions.end(),
                           [&](const Vec3& p) { return std::abs(p.x - x) < 1e-12 && std::abs(p.y - y) < 1e-12; });
    };
    for (const auto& p : g.antenna_positions) {
        EXPECT_TRUE(has(2 * c.x - p.x, p.y));
        EXPECT_TRUE(has(p.x, 2 * c.y - p.y));
    }
}

TEST(Distance, Examples) {
    EXPECT_DOUBLE_EQ(distance({0, 0, 1}, {0, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(distance({3, 4, 0}, {0, 0, 0}), 5.0);
    EXPECT_DOUBLE_EQ(distance({0.1, 0.2, 1}, {0.05, 0.1, 0}), std::sqrt(0.05 * 0.05 + 0.1 * 0.1 + 1.0));
}

TEST(LosGain, Examples) {
    EXPECT_NEAR(los_gain({{0, 0, 1}, 0}, {0, 0, 0}), 0.28209479177387814, 1e-15);
    double b = los_gain({{0, 0, 2}, 0}, {0, 0, 0});
    EXPECT_NEAR(b * b, 1.0 / (16 * M_PI), 1e-16);
}

TEST(LosGain, PathLossMatchesFreeSpaceDb) {
    // with the cos factor removed, 10 log10(1/beta^2) = 10 log10(4 pi) + 20 log10 d ~ 11 + 20 log10 d
    for (double d : {1.0, 3.0, 10.0}) {
        double b = los_gain({{0, 0, d}, 0}, {0, 0, 0});
        double loss_db = -10 * std::log10(b * b);
        EXPECT_NEAR(loss_db, 10 * std::log10(4 * M_PI) + 20 * std::log10(d), 1e-9);
        EXPECT_NEAR(loss_db - 20 * std::log10(d), 11.0, 0.1);
    }
}

TEST(LosGain, DecreasesWithLateralOffset) {
    Device dev{{0, 0, 1.3}, 0};
    double prev = los_gain(dev, {0, 0, 0});
    for (int i = 1; i < 100; ++i) {
        double cur = los_gain(dev, {0.05 * i, 0.02 * i, 0});
        EXPECT_LT(cur, prev);
        prev = cur;
    }
}

TEST(LosGain, SumConvergesToClosedForm) {
    // beta^2 summed over a 100 x 100 lattice against p / (pi dL^2)
    AntennaGrid g = build_grid({0, 0}, 0.25, 10000, 0.1);
    double s = los_gains({{0, 0, 1}, 0}, g).squaredNorm();
    double ref = p_k(1.0, 0.25) / (M_PI * g.spacing * g.spacing);
    EXPECT_LT(std::abs(s - ref) / ref, 0.01);
    EXPECT_NEAR(s, oracle::lattice_sum(1.0, 0.25, 100, 1), 1e-12 * s);
}

TEST(PlaceDevicesGrid, ThreeByThree) {
    auto d = place_devices_grid(10, {-10, 10}, {-10, 10}, 1);
    EXPECT_EQ(d.size(), 9u);
    EXPECT_EQ(d[0].position.x, 0.0);
    EXPECT_EQ(d[0].position.y, 0.0);
    EXPECT_EQ(d[0].position.z, 1.0);
}

TEST(PlaceDevicesGrid, CornersPlusInjectedTarget) {
    auto d = place_devices_grid(20, {-10, 10}, {-10, 10}, 1);
    ASSERT_EQ(d.size(), 5u);
    EXPECT_EQ(d[0].position.x, 0.0);
    for (std::size_t i = 1; i < d.size(); ++i) {
        EXPECT_EQ(std::abs(d[i].position.x), 10.0);
        EXPECT_EQ(std::abs(d[i].position.y), 10.0);
    }
}

TEST(PlaceDevicesGrid, FiveMetrePitch) {
    auto d = place_devices_grid(5, {-10, 10}, {-10, 10}, 1);
    EXPECT_EQ(d.size(), 25u);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d[i].index, static_cast<int>(i));
}

TEST(PlaceDevicesGrid, NonMultipleRangeStartsAtMinimum) {
    auto d = place_devices_grid(3, {-10, 10}, {-10, 10}, 1);
    // 7 x 7 lattice from -10 in steps of 3 misses the origin, so the target is added
    EXPECT_EQ(d.size(), 50u);
    double minx = 1e9;
    for (const auto& dev : d) minx = std::min(minx, dev.position.x);
    EXPECT_EQ(minx, -10.0);
}

TEST(PlaceDevicesUniform, SingleDeviceInSlab) {
    Box b{{-1, 1}, {-1, 1}, {1, 3}};
    auto d = place_devices_uniform(1, b, 7);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_GE(d[0].position.z, 1.0);
    EXPECT_LE(d[0].position.z, 3.0);
}

TEST(PlaceDevicesUniform, Deterministic) {
    Box room{{-2, 2}, {-2, 2}, {0, 2}};
    auto a = place_devices_uniform(30, room, 99);
    auto b = place_devices_uniform(30, room, 99);
    auto c = place_devices_uniform(30, room, 100);
    bool differs = false;
    for (int i = 0; i < 30; ++i) {
        EXPECT_EQ(a[i].position.x, b[i].position.x);
        EXPECT_EQ(a[i].position.y, b[i].position.y);
        EXPECT_EQ(a[i].position.z, b[i].position.z);
        differs = differs || a[i].position.x != c[i].position.x;
    }
    EXPECT_TRUE(differs);
}

TEST(PlaceDevicesUniform, RoomMembershipAndMinimumDistance) {
    Box room{{-2, 2}, {-2, 2}, {0, 2}};
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto d = place_devices_uniform(30, room, s);
        ASSERT_EQ(d.size(), 30u);
        for (const auto& dev : d) {
            EXPECT_GE(dev.position.x, -2.0);
            EXPECT_LE(dev.position.x, 2.0);
            EXPECT_GE(dev.position.y, -2.0);
            EXPECT_LE(dev.position.y, 2.0);
            EXPECT_GE(dev.position.z, 1.0);
            EXPECT_LE(dev.position.z, 2.0);
        }
    }
}

TEST(PlaceDevicesUniform, ImpossibleBoxRejected) {
    Box low{{-2, 2}, {-2, 2}, {0, 0.5}};
    EXPECT_THROW(place_devices_uniform(3, low, 1), std::invalid_argument);
    Box flat{{-2, 2}, {-2, 2}, {1, 1}};
    EXPECT_THROW(place_devices_uniform(3, flat, 1), std::invalid_argument);
}
