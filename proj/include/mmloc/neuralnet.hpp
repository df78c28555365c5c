// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/error.hpp"
#include "mmloc/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace mmloc {

/// Hidden-layer transfer functions, named after their MATLAB counterparts.
enum class Activation { Tansig, Logsig, Purelin, Poslin, Radbas };

inline constexpr std::array<Activation, 5> kAllActivations{
    Activation::Tansig, Activation::Logsig, Activation::Purelin, Activation::Poslin, Activation::Radbas};

inline std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::Tansig: return "tansig";
    case Activation::Logsig: return "logsig";
    case Activation::Purelin: return "purelin";
    case Activation::Poslin: return "poslin";
    case Activation::Radbas: return "radbas";
    }
    return "?";
}

inline Activation parse_activation(std::string_view s) {
    for (auto a : kAllActivations)
        if (to_string(a) == s)
            return a;
    throw ConfigError("unknown activation '" + std::string(s) + "'");
}

inline double activate(Activation a, double x) {
    switch (a) {
    case Activation::Tansig: return std::tanh(x);
    case Activation::Logsig: return 1.0 / (1.0 + std::exp(-x));
    case Activation::Purelin: return x;
    case Activation::Poslin: return x > 0.0 ? x : 0.0;
    case Activation::Radbas: return std::exp(-x * x);
    }
    return x;
}

/// Derivative with respect to the pre-activation; poslin'(0) is 0.
inline double activate_derivative(Activation a, double x) {
    switch (a) {
    case Activation::Tansig: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    case Activation::Logsig: {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
    }
    case Activation::Purelin: return 1.0;
    case Activation::Poslin: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Radbas: return -2.0 * x * std::exp(-x * x);
    }
    return 1.0;
}

/// Fully connected regressor. Every hidden layer uses `hidden_activation`; the
/// output layer is linear. weights[l] has shape (layer_sizes[l+1], layer_sizes[l]).
struct MlpModel {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    Activation hidden_activation = Activation::Tansig;
    std::uint64_t rng_seed = 0;

    int num_inputs() const { return layer_sizes.front(); }
    int num_outputs() const { return layer_sizes.back(); }
    std::size_t num_layers() const { return weights.size(); }
};

/// Weights and biases drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
inline MlpModel make_mlp(std::vector<int> layer_sizes, Activation hidden, std::uint64_t seed) {
    if (layer_sizes.size() < 2)
        throw ConfigError("an MLP needs at least an input and an output layer");
    for (int n : layer_sizes)
        if (n < 1)
            throw ConfigError("layer sizes must be positive");
    MlpModel model;
    model.layer_sizes = std::move(layer_sizes);
    model.hidden_activation = hidden;
    model.rng_seed = seed;
    auto rng = make_rng(seed, "init");
    for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
        const int fan_in = model.layer_sizes[l];
        const int fan_out = model.layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                w(r, c) = uniform(rng, -bound, bound);
        Eigen::VectorXd b(fan_out);
        for (Eigen::Index r = 0; r < b.size(); ++r)
            b(r) = uniform(rng, -bound, bound);
        model.weights.push_back(std::move(w));
        model.biases.push_back(std::move(b));
    }
    return model;
}

/// Two hidden layers with two outputs (x, y).
inline MlpModel make_localizer(int num_inputs, int h1, int h2, Activation hidden, std::uint64_t seed) {
    return make_mlp({num_inputs, h1, h2, 2}, hidden, seed);
}

inline void check_model(const MlpModel& model) {
    if (model.layer_sizes.size() < 2 || model.weights.size() + 1 != model.layer_sizes.size() ||
        model.biases.size() != model.weights.size())
        throw ShapeError("model layer count is inconsistent");
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        if (model.weights[l].rows() != model.layer_sizes[l + 1] || model.weights[l].cols() != model.layer_sizes[l] ||
            model.biases[l].size() != model.layer_sizes[l + 1])
            throw ShapeError("weight shapes do not match layer sizes at layer " + std::to_string(l));
    }
}

namespace detail {

struct ForwardTrace {
    std::vector<Eigen::MatrixXd> pre;  // pre-activations per layer, rows = samples
    std::vector<Eigen::MatrixXd> post; // post[0] = input, post[l+1] = layer l output
};

inline ForwardTrace forward_trace(const MlpModel& model, const Eigen::MatrixXd& x) {
    ForwardTrace t;
    t.post.push_back(x);
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        Eigen::MatrixXd z = t.post.back() * model.weights[l].transpose();
        z.rowwise() += model.biases[l].transpose();
        const bool hidden = l + 1 < model.num_layers();
        Eigen::MatrixXd a = hidden ? z.unaryExpr([&](double v) { return activate(model.hidden_activation, v); })
                                         .eval()
                                   : z;
        t.pre.push_back(std::move(z));
        t.post.push_back(std::move(a));
    }
    return t;
}

} // namespace detail

/// Network output for each row of `features`.
inline Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& features) {
    check_model(model);
    if (features.cols() != model.num_inputs())
        throw ShapeError("model expects " + std::to_string(model.num_inputs()) + " features, got " +
                         std::to_string(features.cols()));
    return detail::forward_trace(model, features).post.back();
}

/// Mean over users and coordinates of the squared error.
inline double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& labels) {
    if (pred.rows() != labels.rows() || pred.cols() != labels.cols())
        throw ShapeError("prediction and label shapes differ");
    if (pred.size() == 0)
        throw ShapeError("empty prediction matrix");
    return (pred - labels).squaredNorm() / static_cast<double>(pred.size());
}

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    double loss = 0.0;
};

/// Analytic gradient of mse_loss with respect to every weight and bias.
inline Gradients backward(const MlpModel& model, const Eigen::MatrixXd& features, const Eigen::MatrixXd& labels) {
    check_model(model);
    if (features.cols() != model.num_inputs())
        throw ShapeError("feature width does not match model input");
    if (labels.rows() != features.rows() || labels.cols() != model.num_outputs())
        throw ShapeError("label shape does not match model output");

    const auto t = detail::forward_trace(model, features);
    const std::size_t L = model.num_layers();
    Gradients g;
    g.weights.resize(L);
    g.biases.resize(L);
    g.loss = mse_loss(t.post.back(), labels);

    Eigen::MatrixXd delta = (t.post.back() - labels) * (2.0 / static_cast<double>(labels.size()));
    for (std::size_t l = L; l-- > 0;) {
        g.weights[l] = delta.transpose() * t.post[l];
        g.biases[l] = delta.colwise().sum().transpose();
        if (l == 0)
            break;
        delta = (delta * model.weights[l]).cwiseProduct(
            t.pre[l - 1].unaryExpr([&](double v) { return activate_derivative(model.hidden_activation, v); }));
    }
    return g;
}

struct TrainConfig {
    double learning_rate = 0.01;
    int max_epochs = 2000;
    int batch_size = 0;                // 0 = full batch
    int patience = 50;                 // epochs without improvement before stopping
    double min_improvement = 1e-9;     // smallest MSE decrease that counts
    std::uint64_t seed = 0;            // minibatch shuffling
};

inline void validate(const TrainConfig& config) {
    if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate))
        throw ConfigError("learning_rate must be finite and non-negative");
    if (config.max_epochs < 1)
        throw ConfigError("max_epochs must be >= 1");
    if (config.batch_size < 0)
        throw ConfigError("batch_size must be >= 0");
    if (config.patience < 1)
        throw ConfigError("patience must be >= 1");
}

struct TrainResult {
    MlpModel model;
    std::vector<double> loss_history; // full-data MSE before each epoch, plus the final value
};

/// Gradient descent on the MSE. Stops after max_epochs or once the loss has not
/// improved by min_improvement for `patience` epochs. Throws DivergenceError
/// when the loss becomes non-finite.
inline TrainResult train(MlpModel model, const Eigen::MatrixXd& features, const Eigen::MatrixXd& labels,
                         const TrainConfig& config) {
    validate(config);
    auto rng = make_rng(config.seed, "batches");
    const auto n = features.rows();
    const bool full = config.batch_size == 0 || config.batch_size >= n;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    auto step = [&](const Gradients& g) {
        for (std::size_t l = 0; l < model.num_layers(); ++l) {
            model.weights[l] -= config.learning_rate * g.weights[l];
            model.biases[l] -= config.learning_rate * g.biases[l];
        }
    };

    TrainResult result;
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        if (full) {
            const auto g = backward(model, features, labels);
            if (!std::isfinite(g.loss))
                throw DivergenceError(static_cast<std::size_t>(epoch));
            result.loss_history.push_back(g.loss);
            if (g.loss < best - config.min_improvement) {
                best = g.loss;
                stale = 0;
            } else if (++stale >= config.patience) {
                break;
            }
            step(g);
        } else {
            const double loss = mse_loss(forward(model, features), labels);
            if (!std::isfinite(loss))
                throw DivergenceError(static_cast<std::size_t>(epoch));
            result.loss_history.push_back(loss);
            if (loss < best - config.min_improvement) {
                best = loss;
                stale = 0;
            } else if (++stale >= config.patience) {
                break;
            }
            std::shuffle(order.begin(), order.end(), rng);
            for (Eigen::Index start = 0; start < n; start += config.batch_size) {
                const Eigen::Index len = std::min<Eigen::Index>(config.batch_size, n - start);
                const std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + start + len);
                step(backward(model, features(idx, Eigen::all), labels(idx, Eigen::all)));
            }
        }
    }
    const double final_loss = mse_loss(forward(model, features), labels);
    if (!std::isfinite(final_loss))
        throw DivergenceError(static_cast<std::size_t>(result.loss_history.size()));
    result.loss_history.push_back(final_loss);
    result.model = std::move(model);
    return result;
}

} // namespace mmloc
