// SPDX-License-Identifier: Apache-2.0
#include "gradcheck.hpp"

#include "mmloc/neuralnet.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mmloc;

TEST(Activation, KnownValues) {
    EXPECT_EQ(activate(Activation::Tansig, 0.0), 0.0);
    EXPECT_EQ(activate(Activation::Logsig, 0.0), 0.5);
    EXPECT_EQ(activate(Activation::Purelin, -3.5), -3.5);
    EXPECT_EQ(activate(Activation::Poslin, -2.0), 0.0);
    EXPECT_EQ(activate(Activation::Poslin, 2.0), 2.0);
    EXPECT_EQ(activate(Activation::Radbas, 0.0), 1.0);
    EXPECT_NEAR(activate(Activation::Radbas, 1.0), 0.36787944117144233, 1e-16);
    EXPECT_NEAR(activate(Activation::Tansig, 1.0), 0.7615941559557649, 1e-16);
    EXPECT_EQ(activate_derivative(Activation::Poslin, 0.0), 0.0);
    EXPECT_EQ(activate_derivative(Activation::Tansig, 0.0), 1.0);
    EXPECT_EQ(activate_derivative(Activation::Logsig, 0.0), 0.25);
}

TEST(Activation, DerivativeMatchesDifferenceQuotient) {
    for (auto a : kAllActivations)
        for (double x = -3.05; x < 3.0; x += 0.1) {
            const double h = 1e-6;
            const double fd = (activate(a, x + h) - activate(a, x - h)) / (2 * h);
            EXPECT_NEAR(activate_derivative(a, x), fd, 1e-8) << to_string(a) << " at " << x;
        }
}

TEST(Activation, NamesRoundTrip) {
    for (auto a : kAllActivations)
        EXPECT_EQ(parse_activation(to_string(a)), a);
    EXPECT_THROW(parse_activation("relu"), ConfigError);
}

TEST(Mlp, ShapesAndInitBounds) {
    const auto m = make_localizer(9, 12, 7, Activation::Tansig, 3);
    ASSERT_EQ(m.num_layers(), 3u);
    EXPECT_EQ(m.weights[0].rows(), 12);
    EXPECT_EQ(m.weights[0].cols(), 9);
    EXPECT_EQ(m.weights[2].rows(), 2);
    EXPECT_LE(m.weights[0].cwiseAbs().maxCoeff(), 1.0 / 3.0);
    EXPECT_LE(m.biases[1].cwiseAbs().maxCoeff(), 1.0 / std::sqrt(12.0));
    EXPECT_THROW(make_mlp({3}, Activation::Tansig, 0), ConfigError);
    EXPECT_THROW(make_mlp({3, 0, 2}, Activation::Tansig, 0), ConfigError);
}

TEST(Mlp, ForwardByHand) {
    auto m = make_mlp({2, 2, 1}, Activation::Poslin, 0);
    m.weights[0] << 1, -1, 2, 0.5;
    m.biases[0] << 0, -1;
    m.weights[1] << 3, -2;
    m.biases[1] << 0.5;
    Eigen::MatrixXd x(2, 2);
    x << 1, 2, -1, 4;
    // Row 0: hidden pre (-1, 2) -> (0, 2) -> 3*0 - 2*2 + 0.5 = -3.5.
    // Row 1: hidden pre (-5, -1) -> (0, 0) -> 0.5.
    const auto y = forward(m, x);
    EXPECT_DOUBLE_EQ(y(0, 0), -3.5);
    EXPECT_DOUBLE_EQ(y(1, 0), 0.5);
    EXPECT_THROW(forward(m, Eigen::MatrixXd(2, 3)), ShapeError);
}

TEST(Mlp, MseExample) {
    Eigen::MatrixXd p(2, 2), y(2, 2);
    p << 0, 0, 0, 0;
    y << 1, 2, 3, 6;
    EXPECT_DOUBLE_EQ(mse_loss(p, y), 12.5);
    EXPECT_THROW(mse_loss(p, Eigen::MatrixXd(3, 2)), ShapeError);
}

TEST(Backward, MatchesFiniteDifferences) {
    for (auto a : kAllActivations)
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto p = testkit::random_grad_problem(a, seed);
            const auto c = testkit::check_gradients(p.model, p.x, p.y);
            EXPECT_LE(c.worst_excess, 1.0) << to_string(a) << " seed " << seed;
        }
}

TEST(Backward, LinearModelClosedForm) {
    // One linear layer: dL/dW = 2/(N*O) * (XW^T + b - Y)^T X.
    auto m = make_mlp({3, 2}, Activation::Tansig, 4);
    Eigen::MatrixXd x(4, 3), y(4, 2);
    x << 1, 2, 3, -1, 0, 2, 0.5, 0.5, 0.5, 2, -2, 1;
    y << 1, 0, 0, 1, 1, 1, -1, 2;
    const Eigen::MatrixXd r = (x * m.weights[0].transpose()).rowwise() + m.biases[0].transpose() - y;
    const Eigen::MatrixXd gw = 2.0 / 8.0 * r.transpose() * x;
    const Eigen::VectorXd gb = 2.0 / 8.0 * r.colwise().sum().transpose();
    const auto g = backward(m, x, y);
    EXPECT_LE((g.weights[0] - gw).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((g.biases[0] - gb).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_DOUBLE_EQ(g.loss, r.squaredNorm() / 8.0);
}

TEST(Train, ZeroLearningRateKeepsLossConstant) {
    const auto p = testkit::random_grad_problem(Activation::Logsig, 2);
    TrainConfig c;
    c.learning_rate = 0.0;
    c.max_epochs = 20;
    c.patience = 100;
    const auto r = train(p.model, p.x, p.y, c);
    ASSERT_EQ(r.loss_history.size(), 21u);
    for (double l : r.loss_history)
        EXPECT_EQ(l, r.loss_history.front());
    EXPECT_EQ(r.model.weights, p.model.weights);
}

TEST(Train, LearnsLinearMap) {
    Eigen::MatrixXd x(21, 1), y(21, 1);
    for (int i = 0; i <= 20; ++i) {
        x(i, 0) = -1.0 + 0.1 * i;
        y(i, 0) = 2.0 * x(i, 0);
    }
    TrainConfig c;
    c.learning_rate = 0.05;
    c.max_epochs = 20000;
    c.patience = 200;
    c.min_improvement = 0.0;
    const auto r = train(make_mlp({1, 1}, Activation::Purelin, 1), x, y, c);
    EXPECT_NEAR(r.model.weights[0](0, 0), 2.0, 1e-3);
    EXPECT_NEAR(r.model.biases[0](0), 0.0, 1e-3);
}

TEST(Train, LossHistoryDecreasesForSmallSteps) {
    const auto p = testkit::random_grad_problem(Activation::Tansig, 8);
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.max_epochs = 200;
    const auto r = train(p.model, p.x, p.y, c);
    for (std::size_t i = 1; i < r.loss_history.size(); ++i)
        EXPECT_LE(r.loss_history[i], r.loss_history[i - 1] + 1e-15);
}

TEST(Train, DeterministicAndDoesNotMutateInputs) {
    const auto p = testkit::random_grad_problem(Activation::Radbas, 6);
    const Eigen::MatrixXd x0 = p.x, y0 = p.y;
    TrainConfig c;
    c.learning_rate = 0.1;
    c.max_epochs = 100;
    c.batch_size = 2;
    c.seed = 77;
    const auto a = train(p.model, p.x, p.y, c);
    const auto b = train(p.model, p.x, p.y, c);
    EXPECT_EQ(a.loss_history, b.loss_history);
    EXPECT_EQ(a.model.weights, b.model.weights);
    EXPECT_EQ(p.x, x0);
    EXPECT_EQ(p.y, y0);
    c.seed = 78;
    EXPECT_NE(train(p.model, p.x, p.y, c).loss_history, a.loss_history);
}

TEST(Train, EarlyStopping) {
    const auto p = testkit::random_grad_problem(Activation::Tansig, 3);
    TrainConfig c;
    c.learning_rate = 0.0;
    c.max_epochs = 1000;
    c.patience = 5;
    // The first epoch sets the best; five stale epochs follow.
    EXPECT_EQ(train(p.model, p.x, p.y, c).loss_history.size(), 7u);
}

TEST(Train, DivergenceIsReported) {
    Eigen::MatrixXd x(3, 1), y(3, 1);
    x << 100, -200, 300;
    y << 1e3, -1e3, 5e2;
    TrainConfig c;
    c.learning_rate = 10.0;
    c.max_epochs = 1000;
    try {
        train(make_mlp({1, 4, 1}, Activation::Purelin, 0), x, y, c);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_GT(e.epoch(), 0u);
    }
}

TEST(Train, RejectsBadConfig) {
    const auto p = testkit::random_grad_problem(Activation::Tansig, 1);
    TrainConfig c;
    c.learning_rate = -1;
    EXPECT_THROW(train(p.model, p.x, p.y, c), ConfigError);
    c.learning_rate = 0.1;
    c.max_epochs = 0;
    EXPECT_THROW(train(p.model, p.x, p.y, c), ConfigError);
}
