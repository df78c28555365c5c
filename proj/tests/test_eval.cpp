// SPDX-License-Identifier: Apache-2.0
#include "mmloc/channel.hpp"
#include "mmloc/eval.hpp"
#include "mmloc/presets.hpp"
#include "mmloc/rng.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace mmloc;

TEST(Errors, EuclideanDistance) {
    const std::vector<Point2D> pred{{3, 4}, {1, 1}};
    const std::vector<Point2D> truth{{0, 0}, {1, 1}};
    const auto e = localization_errors(pred, truth);
    EXPECT_EQ(e[0], 5.0);
    EXPECT_EQ(e[1], 0.0);
    EXPECT_THROW(localization_errors(pred, std::vector<Point2D>{{0, 0}}), ShapeError);
}

TEST(Percentiles, NearestRank) {
    std::vector<double> v;
    for (int i = 1; i <= 10; ++i)
        v.push_back(i);
    EXPECT_EQ(nearest_rank(v, 90), 9.0);
    EXPECT_EQ(nearest_rank(v, 50), 5.0);
    EXPECT_EQ(nearest_rank(v, 100), 10.0);
    EXPECT_EQ(nearest_rank(v, 0), 1.0);
    const std::vector<double> one{0.42};
    EXPECT_EQ(nearest_rank(one, 90), 0.42);
    // ceil(0.9 * 7) = 7.
    EXPECT_EQ(nearest_rank(std::vector<double>{1, 2, 3, 4, 5, 6, 7}, 90), 7.0);
    EXPECT_THROW(nearest_rank(std::vector<double>{}, 50), ShapeError);
}

TEST(EmpiricalCdf, SummaryStatistics) {
    const std::vector<double> e{0.5, 0.1, 0.3, 0.2, 0.4, 0.9, 0.8, 0.7, 0.6, 1.0};
    const auto r = empirical_cdf(e, 0.85);
    EXPECT_EQ(r.p90_m, 0.9);
    EXPECT_EQ(r.p50_m, 0.5);
    EXPECT_NEAR(r.mean_m, 0.55, 1e-15);
    EXPECT_EQ(r.outlier_count, 2);
    ASSERT_EQ(r.cdf.size(), 10u);
    EXPECT_EQ(r.cdf.front().error_m, 0.1);
    EXPECT_EQ(r.cdf.back().fraction, 1.0);
    for (std::size_t i = 1; i < r.cdf.size(); ++i) {
        EXPECT_GE(r.cdf[i].error_m, r.cdf[i - 1].error_m);
        EXPECT_GT(r.cdf[i].fraction, r.cdf[i - 1].fraction);
    }
    EXPECT_EQ(r.per_user_error_m, e);
}

TEST(EmpiricalCdf, SingleUser) {
    const auto r = empirical_cdf(std::vector<double>{2.5});
    EXPECT_EQ(r.p50_m, 2.5);
    EXPECT_EQ(r.p90_m, 2.5);
    EXPECT_EQ(r.cdf.size(), 1u);
    EXPECT_EQ(r.outlier_count, 0);
    EXPECT_THROW(empirical_cdf(std::vector<double>{}), ShapeError);
}

TEST(GeometricFix, KnownPoint) {
    const auto p = los_geometric_fix({1, 1}, std::atan2(4.0, 3.0), 5.0 / kSpeedOfLight);
    EXPECT_NEAR(p.x, 4.0, 1e-12);
    EXPECT_NEAR(p.y, 5.0, 1e-12);
    EXPECT_THROW(los_geometric_fix({0, 0}, 0.0, 0.0), ConfigError);
    EXPECT_THROW(los_geometric_fix({0, 0}, 0.0, -1e-9), ConfigError);
}

TEST(GeometricFix, InvertsTheLosPath) {
    const auto scene = preset_scene("los-subgrid");
    const Point2D bs = scene.base_stations[0];
    for (const auto& g : build_grid(scene)) {
        const auto paths = trace_paths(scene, bs, g.position);
        ASSERT_FALSE(paths.empty());
        ASSERT_EQ(paths.front().bounce_count, 0);
        const auto m = path_to_mpc(paths.front(), scene, bs);
        const auto p = los_geometric_fix(bs, m.aoa_az_rad, m.toa_s);
        EXPECT_LE(distance(p, g.position), 1e-9);
    }
}
