// SPDX-License-Identifier: Apache-2.0
#include "sphere.hpp"

#include "mmloc/hyperopt.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mmloc;

TEST(ExpectedImprovement, KnownValues) {
    EXPECT_NEAR(expected_improvement(0.0, 1.0, 0.0), 0.3989422804014327, 1e-15);
    EXPECT_EQ(expected_improvement(1.0, 0.0, 3.0), 2.0);
    EXPECT_EQ(expected_improvement(3.0, 0.0, 1.0), 0.0);
    // (best - mu) Phi(1) + sigma phi(1) with best - mu = 1, sigma = 1.
    EXPECT_NEAR(expected_improvement(0.0, 1.0, 1.0), 0.8413447460685429 + 0.24197072451914337, 1e-15);
}

TEST(ExpectedImprovement, NonNegativeAndMonotone) {
    auto rng = make_rng(2, "ei");
    for (int i = 0; i < 1000; ++i) {
        const double mu = uniform(rng, -5, 5), sd = uniform(rng, 0, 3), best = uniform(rng, -5, 5);
        const double ei = expected_improvement(mu, sd, best);
        EXPECT_GE(ei, 0.0);
        EXPECT_GE(ei, std::max(best - mu, 0.0) - 1e-12);
        EXPECT_GE(expected_improvement(mu, sd + 0.1, best), ei - 1e-12);
    }
}

TEST(UnitCoordinates, RoundTripAndBounds) {
    HyperSpace space;
    const HyperConfig c{17, 50, 0.05, Activation::Radbas};
    const auto u = to_unit(space, c);
    EXPECT_EQ(to_config(space, u, c.activation).h1, 17);
    EXPECT_EQ(to_config(space, u, c.activation).h2, 50);
    EXPECT_NEAR(to_config(space, u, c.activation).learning_rate, 0.05, 1e-15);
    const auto lo = to_config(space, {0, 0, 0}, Activation::Tansig);
    const auto hi = to_config(space, {1, 1, 1}, Activation::Tansig);
    EXPECT_EQ(lo.h1, 4);
    EXPECT_EQ(hi.h2, 50);
    EXPECT_DOUBLE_EQ(lo.learning_rate, 1e-3);
    EXPECT_DOUBLE_EQ(hi.learning_rate, 1.0);
}

TEST(GaussianProcess, InterpolatesTrainingPoints) {
    const std::vector<UnitPoint> x{{0.1, 0.2, 0.3}, {0.8, 0.1, 0.5}, {0.4, 0.9, 0.7}};
    Eigen::VectorXd y(3);
    y << 1.0, -0.5, 0.25;
    GaussianProcess gp(x, y, {0.3, 0.3, 0.3});
    for (int i = 0; i < 3; ++i) {
        const auto [m, sd] = gp.predict(x[static_cast<std::size_t>(i)]);
        EXPECT_NEAR(m, y(i), 1e-5);
        EXPECT_LT(sd, 1e-3);
    }
    const auto [far_m, far_sd] = gp.predict({10, 10, 10});
    EXPECT_NEAR(far_m, 0.0, 1e-12);
    EXPECT_NEAR(far_sd, 1.0, 1e-12);
}

TEST(GaussianProcess, DuplicateInputsStillFactorize) {
    const std::vector<UnitPoint> x{{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}};
    Eigen::VectorXd y(2);
    y << 1.0, 1.0;
    GaussianProcess gp(x, y, {0.2, 0.2, 0.2});
    EXPECT_TRUE(std::isfinite(gp.log_marginal_likelihood()));
    EXPECT_TRUE(std::isfinite(gp.predict({0.4, 0.5, 0.5}).first));
}

TEST(Optimize, SingleTrialBudget) {
    HyperSpace space;
    OptimizeOptions o;
    o.budget = 1;
    o.n_init = 1;
    o.seed = 4;
    int calls = 0;
    const auto r = optimize(space, [&](const HyperConfig&, std::uint64_t) { return double(++calls); }, o);
    EXPECT_EQ(calls, 1);
    ASSERT_EQ(r.log.size(), 1u);
    EXPECT_EQ(r.best.config, r.log[0].config);
    EXPECT_EQ(r.best.cost, 1.0);
}

TEST(Optimize, ConstantObjective) {
    HyperSpace space;
    OptimizeOptions o;
    o.budget = 8;
    o.candidates = 64;
    const auto r = optimize(space, [](const HyperConfig&, std::uint64_t) { return 0.75; }, o);
    ASSERT_EQ(r.log.size(), 8u);
    EXPECT_EQ(r.best.cost, 0.75);
    for (const auto& t : r.log)
        EXPECT_TRUE(contains(space, t.config));
}

TEST(Optimize, TrialsStayInBoundsAndBestSoFarIsMonotone) {
    HyperSpace space;
    space.activations = {Activation::Tansig, Activation::Poslin};
    OptimizeOptions o;
    o.budget = 15;
    o.candidates = 128;
    o.seed = 12;
    const auto r = optimize(
        space, [&](const HyperConfig& c, std::uint64_t) { return testkit::sphere_cost(space, c); }, o);
    for (const auto& t : r.log) {
        EXPECT_TRUE(contains(space, t.config));
        EXPECT_EQ(t.seed, substream_seed(12, "trial", static_cast<std::uint64_t>(t.index)));
    }
    const auto curve = best_so_far(r.log);
    ASSERT_EQ(curve.size(), 15u);
    for (std::size_t i = 1; i < curve.size(); ++i)
        EXPECT_LE(curve[i], curve[i - 1]);
    EXPECT_EQ(curve.back(), *r.best.cost);
}

TEST(Optimize, DeterministicForASeed) {
    HyperSpace space;
    OptimizeOptions o;
    o.budget = 10;
    o.candidates = 128;
    o.seed = 99;
    auto f = [&](const HyperConfig& c, std::uint64_t) { return testkit::sphere_cost(space, c); };
    const auto a = optimize(space, f, o), b = optimize(space, f, o);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        EXPECT_EQ(a.log[i].config, b.log[i].config);
        EXPECT_EQ(a.log[i].cost, b.log[i].cost);
    }
}

TEST(Optimize, FailuresAreLoggedAsDiverged) {
    HyperSpace space;
    OptimizeOptions o;
    o.budget = 9;
    o.candidates = 64;
    int calls = 0;
    const auto r = optimize(
        space,
        [&](const HyperConfig& c, std::uint64_t) -> double {
            ++calls;
            if (calls % 3 == 0)
                throw DivergenceError(5);
            if (calls % 3 == 1)
                return std::numeric_limits<double>::quiet_NaN();
            return c.learning_rate;
        },
        o);
    ASSERT_EQ(r.log.size(), 9u);
    int diverged = 0;
    for (const auto& t : r.log)
        diverged += t.diverged() ? 1 : 0;
    EXPECT_EQ(diverged, 6);
    EXPECT_FALSE(r.best.diverged());
    const auto curve = best_so_far(r.log);
    for (std::size_t i = 1; i < curve.size(); ++i)
        EXPECT_LE(curve[i], curve[i - 1]);
}

TEST(Optimize, DivergedTrialsArePenalized) {
    std::vector<Trial> log(3);
    log[0].cost = 2.0;
    log[2].cost = 0.5;
    EXPECT_EQ(effective_cost(log[1], log), 20.0);
    EXPECT_EQ(effective_cost(log[0], log), 2.0);
    std::vector<Trial> none(2);
    EXPECT_EQ(effective_cost(none[0], none), 1.0);
}

TEST(Optimize, RejectsBadOptions) {
    HyperSpace space;
    OptimizeOptions o;
    o.budget = 2;
    o.n_init = 3;
    auto f = [](const HyperConfig&, std::uint64_t) { return 1.0; };
    EXPECT_THROW(optimize(space, f, o), ConfigError);
    space.activations.clear();
    o.budget = 5;
    EXPECT_THROW(optimize(space, f, o), ConfigError);
}

TEST(Optimize, BeatsRandomSearchOnSphere) {
    HyperSpace space;
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        OptimizeOptions o;
        o.budget = 30;
        o.seed = seed;
        auto f = [&](const HyperConfig& c, std::uint64_t) { return testkit::sphere_cost(space, c); };
        const double bo = *optimize(space, f, o).best.cost;
        wins += bo <= testkit::random_search_best(space, f, 30, seed) ? 1 : 0;
    }
    EXPECT_GE(wins, 5);
}
