// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/error.hpp"
#include "mmloc/neuralnet.hpp"
#include "mmloc/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace mmloc {

/// Search box: two hidden-layer widths, a log-uniform learning rate and a
/// categorical activation.
struct HyperSpace {
    int nodes_min = 4;
    int nodes_max = 50;
    double lr_min = 1e-3;
    double lr_max = 1.0;
    std::vector<Activation> activations{kAllActivations.begin(), kAllActivations.end()};
};

inline void validate(const HyperSpace& space) {
    if (space.nodes_min < 1 || space.nodes_max < space.nodes_min)
        throw ConfigError("invalid node-count range");
    if (!(space.lr_min > 0.0) || !(space.lr_max >= space.lr_min))
        throw ConfigError("invalid learning-rate range");
    if (space.activations.empty())
        throw ConfigError("no activations to search");
}

struct HyperConfig {
    int h1 = 10;
    int h2 = 10;
    double learning_rate = 0.01;
    Activation activation = Activation::Tansig;

    friend bool operator==(const HyperConfig&, const HyperConfig&) = default;
};

/// Continuous coordinates in [0,1]^3: (log learning rate, h1, h2).
using UnitPoint = std::array<double, 3>;

inline HyperConfig to_config(const HyperSpace& space, const UnitPoint& u, Activation activation) {
    const double span = space.nodes_max - space.nodes_min;
    HyperConfig c;
    c.learning_rate = std::exp(std::log(space.lr_min) + u[0] * (std::log(space.lr_max) - std::log(space.lr_min)));
    c.learning_rate = std::clamp(c.learning_rate, space.lr_min, space.lr_max);
    c.h1 = std::clamp(static_cast<int>(std::lround(space.nodes_min + u[1] * span)), space.nodes_min, space.nodes_max);
    c.h2 = std::clamp(static_cast<int>(std::lround(space.nodes_min + u[2] * span)), space.nodes_min, space.nodes_max);
    c.activation = activation;
    return c;
}

inline UnitPoint to_unit(const HyperSpace& space, const HyperConfig& c) {
    const double lr_span = std::log(space.lr_max) - std::log(space.lr_min);
    const double span = space.nodes_max - space.nodes_min;
    return {lr_span > 0 ? (std::log(c.learning_rate) - std::log(space.lr_min)) / lr_span : 0.5,
            span > 0 ? (c.h1 - space.nodes_min) / span : 0.5, span > 0 ? (c.h2 - space.nodes_min) / span : 0.5};
}

inline bool contains(const HyperSpace& space, const HyperConfig& c) {
    return c.h1 >= space.nodes_min && c.h1 <= space.nodes_max && c.h2 >= space.nodes_min &&
           c.h2 <= space.nodes_max && c.learning_rate >= space.lr_min && c.learning_rate <= space.lr_max &&
           std::find(space.activations.begin(), space.activations.end(), c.activation) != space.activations.end();
}

struct Trial {
    int index = 0;
    HyperConfig config;
    std::optional<double> cost; // empty when the objective diverged or threw
    std::uint64_t seed = 0;

    bool diverged() const { return !cost.has_value(); }
};

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Expected improvement below `best` for a minimization problem.
inline double expected_improvement(double mean, double stddev, double best) {
    const double gain = best - mean;
    if (!(stddev > 0.0))
        return std::max(gain, 0.0);
    const double z = gain / stddev;
    return std::max(0.0, gain * normal_cdf(z) + stddev * normal_pdf(z));
}

/// Zero-mean, unit-variance GP with a squared-exponential kernel.
class GaussianProcess {
public:
    static constexpr double kJitter = 1e-8;

    GaussianProcess(std::vector<UnitPoint> x, Eigen::VectorXd y, UnitPoint length_scales)
        : x_(std::move(x)), y_(std::move(y)), ell_(length_scales) {
        const auto n = static_cast<Eigen::Index>(x_.size());
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                k(i, j) = kernel(x_[static_cast<std::size_t>(i)], x_[static_cast<std::size_t>(j)]);
        // Repeated inputs make K singular; grow the jitter until it factorizes.
        for (double jitter = kJitter;; jitter *= 10.0) {
            chol_.compute(k + jitter * Eigen::MatrixXd::Identity(n, n));
            if (chol_.info() == Eigen::Success || jitter > 1.0)
                break;
        }
        alpha_ = chol_.solve(y_);
    }

    double kernel(const UnitPoint& a, const UnitPoint& b) const {
        double s = 0.0;
        for (std::size_t d = 0; d < a.size(); ++d) {
            const double r = (a[d] - b[d]) / ell_[d];
            s += r * r;
        }
        return std::exp(-0.5 * s);
    }

    double log_marginal_likelihood() const {
        const Eigen::MatrixXd l = chol_.matrixL();
        return -0.5 * y_.dot(alpha_) - l.diagonal().array().log().sum() -
               0.5 * static_cast<double>(y_.size()) * std::log(2.0 * std::numbers::pi);
    }

    /// Posterior mean and standard deviation.
    std::pair<double, double> predict(const UnitPoint& u) const {
        const auto n = static_cast<Eigen::Index>(x_.size());
        Eigen::VectorXd ks(n);
        for (Eigen::Index i = 0; i < n; ++i)
            ks(i) = kernel(u, x_[static_cast<std::size_t>(i)]);
        const double mean = ks.dot(alpha_);
        const Eigen::VectorXd v = chol_.matrixL().solve(ks);
        const double var = std::max(0.0, 1.0 - v.squaredNorm());
        return {mean, std::sqrt(var)};
    }

private:
    std::vector<UnitPoint> x_;
    Eigen::VectorXd y_;
    UnitPoint ell_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::VectorXd alpha_;
};

struct OptimizeOptions {
    int budget = 30;
    int n_init = 5;
    std::uint64_t seed = 0;
    int candidates = 1024;
    std::vector<double> length_scale_grid{0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
};

struct OptimizeResult {
    Trial best;
    std::vector<Trial> log;
};

/// Cost used for a trial when fitting the surrogate: diverged trials are
/// charged ten times the worst finite cost seen so far.
inline double effective_cost(const Trial& t, const std::vector<Trial>& log) {
    if (t.cost)
        return *t.cost;
    double worst = 0.0;
    bool any = false;
    for (const auto& o : log)
        if (o.cost) {
            worst = any ? std::max(worst, *o.cost) : *o.cost;
            any = true;
        }
    return any && worst > 0.0 ? 10.0 * worst : 1.0;
}

/// Index of the lowest finite-cost trial (earliest on ties); 0 when every trial diverged.
inline std::size_t best_trial_index(const std::vector<Trial>& log) {
    std::size_t best = 0;
    bool found = false;
    for (std::size_t i = 0; i < log.size(); ++i)
        if (log[i].cost && (!found || *log[i].cost < *log[best].cost)) {
            best = i;
            found = true;
        }
    return best;
}

/// Running minimum of finite costs; +inf until the first finite trial.
inline std::vector<double> best_so_far(const std::vector<Trial>& log) {
    std::vector<double> curve;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : log) {
        if (t.cost)
            best = std::min(best, *t.cost);
        curve.push_back(best);
    }
    return curve;
}

/// Costs span many orders of magnitude (a diverging run can report 1e100), so
/// the surrogate models log(cost) rather than the cost itself.
inline double surrogate_target(double cost) { return std::log(cost + 1e-12); }

using Objective = std::function<double(const HyperConfig&, std::uint64_t trial_seed)>;

namespace detail {

struct Surrogates {
    std::vector<std::optional<GaussianProcess>> per_activation;
    double y_mean = 0.0;
    double y_scale = 1.0;
};

// One GP per activation over the trials that used it. Length scales are shared
// across activations and chosen by maximizing the summed log marginal likelihood
// over the grid.
inline Surrogates fit_surrogates(const HyperSpace& space, const std::vector<Trial>& log,
                                 const std::vector<double>& grid) {
    std::vector<double> costs;
    for (const auto& t : log)
        costs.push_back(surrogate_target(effective_cost(t, log)));
    Surrogates s;
    const double n = static_cast<double>(costs.size());
    for (double c : costs)
        s.y_mean += c / n;
    double var = 0.0;
    for (double c : costs)
        var += (c - s.y_mean) * (c - s.y_mean) / n;
    s.y_scale = var > 0.0 ? std::sqrt(var) : 1.0;

    std::vector<std::vector<UnitPoint>> xs(space.activations.size());
    std::vector<std::vector<double>> ys(space.activations.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto it = std::find(space.activations.begin(), space.activations.end(), log[i].config.activation);
        const auto a = static_cast<std::size_t>(it - space.activations.begin());
        xs[a].push_back(to_unit(space, log[i].config));
        ys[a].push_back((costs[i] - s.y_mean) / s.y_scale);
    }
    auto build = [&](const UnitPoint& ell) {
        std::vector<std::optional<GaussianProcess>> gps(space.activations.size());
        for (std::size_t a = 0; a < xs.size(); ++a)
            if (!xs[a].empty())
                gps[a].emplace(xs[a], Eigen::Map<const Eigen::VectorXd>(ys[a].data(), static_cast<Eigen::Index>(ys[a].size())),
                               ell);
        return gps;
    };

    double best_lml = -std::numeric_limits<double>::infinity();
    UnitPoint best_ell{grid.back(), grid.back(), grid.back()};
    for (double l0 : grid)
        for (double l1 : grid)
            for (double l2 : grid) {
                const UnitPoint ell{l0, l1, l2};
                double lml = 0.0;
                for (const auto& gp : build(ell))
                    if (gp)
                        lml += gp->log_marginal_likelihood();
                if (lml > best_lml) {
                    best_lml = lml;
                    best_ell = ell;
                }
            }
    s.per_activation = build(best_ell);
    return s;
}

} // namespace detail

/// Bayesian optimization of `objective` over `space`. The first n_init trials are
/// uniform random; later ones maximize expected improvement over seeded random
/// candidates. An objective that throws is logged as diverged.
inline OptimizeResult optimize(const HyperSpace& space, const Objective& objective, const OptimizeOptions& options) {
    validate(space);
    if (options.n_init < 1 || options.budget < options.n_init)
        throw ConfigError("hyperopt needs budget >= n_init >= 1");
    if (options.candidates < 1 || options.length_scale_grid.empty())
        throw ConfigError("hyperopt needs candidates and a length-scale grid");

    auto init_rng = make_rng(options.seed, "hyperopt");
    auto cand_rng = make_rng(options.seed, "candidates");
    OptimizeResult result;

    auto evaluate = [&](const HyperConfig& config) {
        Trial t;
        t.index = static_cast<int>(result.log.size());
        t.config = config;
        t.seed = substream_seed(options.seed, "trial", static_cast<std::uint64_t>(t.index));
        try {
            const double c = objective(config, t.seed);
            if (std::isfinite(c) && c >= 0.0)
                t.cost = c;
        } catch (const std::exception&) {
        }
        result.log.push_back(t);
    };

    for (int i = 0; i < options.n_init; ++i) {
        const UnitPoint u{uniform01(init_rng), uniform01(init_rng), uniform01(init_rng)};
        const auto a = space.activations[uniform_index(init_rng, space.activations.size())];
        evaluate(to_config(space, u, a));
    }

    while (static_cast<int>(result.log.size()) < options.budget) {
        const auto s = detail::fit_surrogates(space, result.log, options.length_scale_grid);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : result.log)
            best = std::min(best, (surrogate_target(effective_cost(t, result.log)) - s.y_mean) / s.y_scale);

        double best_ei = -1.0;
        HyperConfig next;
        for (int c = 0; c < options.candidates; ++c) {
            const UnitPoint u{uniform01(cand_rng), uniform01(cand_rng), uniform01(cand_rng)};
            for (std::size_t a = 0; a < space.activations.size(); ++a) {
                const auto cfg = to_config(space, u, space.activations[a]);
                const auto snapped = to_unit(space, cfg);
                const auto [mean, sd] = s.per_activation[a] ? s.per_activation[a]->predict(snapped)
                                                            : std::pair<double, double>{0.0, 1.0};
                const double ei = expected_improvement(mean, sd, best);
                if (ei > best_ei) {
                    best_ei = ei;
                    next = cfg;
                }
            }
        }
        evaluate(next);
    }

    result.best = result.log[best_trial_index(result.log)];
    return result;
}

} // namespace mmloc
