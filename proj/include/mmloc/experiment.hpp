// SPDX-License-Identifier: Apache-2.0
#pragma once

// Glue between the modules: dataset -> features/labels -> training or
// hyperparameter search -> localization error statistics.

#include "mmloc/dataset.hpp"
#include "mmloc/eval.hpp"
#include "mmloc/features.hpp"
#include "mmloc/hyperopt.hpp"
#include "mmloc/model_io.hpp"
#include "mmloc/neuralnet.hpp"
#include "mmloc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

namespace mmloc {

/// Network inputs and targets for the users that qualify for a feature mode.
struct Prepared {
    FeatureSet features;
    LabelMatrix labels;
    std::vector<int> user_ids;
    std::vector<Point2D> positions;
    int excluded_padded = 0; // fewer MPCs than slots
    int excluded_no_path = 0;
};

/// Users with no path are dropped; for the MPC-parameter modes so are users
/// with fewer than `num_mpcs` paths. Normalization is fit on the kept users
/// unless ranges are supplied.
inline Prepared prepare(const std::vector<UserRecord>& users, const ChannelConfig& channel, FeatureMode mode,
                        int num_mpcs = 3, const std::optional<NormParams>& feature_norm = std::nullopt,
                        const std::optional<NormParams>& label_norm = std::nullopt) {
    Prepared p;
    std::vector<std::vector<Mpc>> per_user;
    std::vector<ChannelResponse> responses;
    for (const auto& u : users) {
        if (u.mpcs.empty()) {
            ++p.excluded_no_path;
            continue;
        }
        if (mode != FeatureMode::AbsResponse && u.mpcs.size() < static_cast<std::size_t>(num_mpcs)) {
            ++p.excluded_padded;
            continue;
        }
        p.user_ids.push_back(u.user_id);
        p.positions.push_back(u.position);
        per_user.push_back(u.mpcs);
        if (mode == FeatureMode::AbsResponse)
            responses.push_back(channel_response(u.mpcs, channel));
    }
    if (p.user_ids.empty())
        throw ConfigError("no users qualify for feature mode " + std::string(to_string(mode)));
    p.features = assemble_features(per_user, responses, mode, num_mpcs, feature_norm);
    p.labels = normalize_labels(p.positions, label_norm);
    return p;
}

inline Preprocessing preprocessing_of(const Prepared& p) {
    return {p.features.mode, p.features.num_mpcs, p.features.norm_params, p.labels.norm_params};
}

struct TrainSettings {
    int max_epochs = 2000;
    int batch_size = 0; // 0 = full batch
    int patience = 50;
    double min_improvement = 1e-9;
};

inline TrainConfig train_config(const HyperConfig& h, const TrainSettings& s, std::uint64_t seed) {
    TrainConfig c;
    c.learning_rate = h.learning_rate;
    c.max_epochs = s.max_epochs;
    c.batch_size = s.batch_size;
    c.patience = s.patience;
    c.min_improvement = s.min_improvement;
    c.seed = seed;
    return c;
}

inline TrainResult train_localizer(const Eigen::MatrixXd& features, const Eigen::MatrixXd& labels,
                                   const HyperConfig& h, const TrainSettings& s, std::uint64_t seed) {
    auto model = make_localizer(static_cast<int>(features.cols()), h.h1, h.h2, h.activation, seed);
    return train(std::move(model), features, labels, train_config(h, s, seed));
}

/// Row indices for training and held-out evaluation. A fraction of 0 keeps
/// every row in both sets (train on everything, test on everything).
struct Split {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
};

inline Split make_split(Eigen::Index n, double holdout_fraction, std::uint64_t seed) {
    Split s;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    if (holdout_fraction <= 0.0) {
        s.train = idx;
        s.test = idx;
        return s;
    }
    if (holdout_fraction >= 1.0)
        throw ConfigError("holdout fraction must be below 1");
    auto rng = make_rng(seed, "split");
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(holdout_fraction * static_cast<double>(n)));
    if (n_test >= idx.size())
        throw ConfigError("holdout leaves no training rows");
    s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(s.test.begin(), s.test.end());
    std::sort(s.train.begin(), s.train.end());
    return s;
}

/// Objective for the hyperparameter search: trains on the training rows and
/// returns the MSE on the test rows (the same rows under the full protocol).
inline Objective training_objective(const Eigen::MatrixXd& features, const Eigen::MatrixXd& labels, const Split& split,
                                    const TrainSettings& settings) {
    return [&features, &labels, split, settings](const HyperConfig& h, std::uint64_t seed) {
        const Eigen::MatrixXd xtr = features(split.train, Eigen::all);
        const Eigen::MatrixXd ytr = labels(split.train, Eigen::all);
        const auto result = train_localizer(xtr, ytr, h, settings, seed);
        if (split.test == split.train)
            return result.loss_history.back();
        return mse_loss(forward(result.model, features(split.test, Eigen::all)), labels(split.test, Eigen::all));
    };
}

/// Predicted positions in meters.
inline std::vector<Point2D> predict_positions(const MlpModel& model, const Eigen::MatrixXd& features,
                                              const NormParams& label_norm) {
    return denormalize_labels(forward(model, features), label_norm);
}

/// Errors longer than the grid diagonal put the estimate outside the grid.
inline double outlier_threshold(const Scene& scene) {
    const auto& g = scene.ue_grid;
    return std::hypot((g.cols - 1) * g.spacing, (g.rows - 1) * g.spacing);
}

inline EvalResult evaluate_positions(std::span<const Point2D> predicted, std::span<const Point2D> actual,
                                     double outlier_threshold_m = std::numeric_limits<double>::infinity()) {
    return empirical_cdf(localization_errors(predicted, actual), outlier_threshold_m);
}

} // namespace mmloc
