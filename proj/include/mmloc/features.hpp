// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/channel.hpp"
#include "mmloc/error.hpp"
#include "mmloc/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmloc {

enum class FeatureMode { Aoa, AoaRss, AoaRssToa, AbsResponse };

inline std::string_view to_string(FeatureMode mode) {
    switch (mode) {
    case FeatureMode::Aoa: return "aoa";
    case FeatureMode::AoaRss: return "aoa-rss";
    case FeatureMode::AoaRssToa: return "aoa-rss-toa";
    case FeatureMode::AbsResponse: return "abs-response";
    }
    return "?";
}

inline FeatureMode parse_feature_mode(std::string_view s) {
    for (auto m : {FeatureMode::Aoa, FeatureMode::AoaRss, FeatureMode::AoaRssToa, FeatureMode::AbsResponse})
        if (to_string(m) == s)
            return m;
    throw ConfigError("unknown feature mode '" + std::string(s) + "'");
}

/// Parameters per MPC slot: 1, 2 or 3 for the parameter modes.
inline int params_per_mpc(FeatureMode mode) {
    switch (mode) {
    case FeatureMode::Aoa: return 1;
    case FeatureMode::AoaRss: return 2;
    case FeatureMode::AoaRssToa: return 3;
    case FeatureMode::AbsResponse: return 0;
    }
    return 0;
}

struct ColumnRange {
    double min = 0.0;
    double max = 0.0;

    friend bool operator==(const ColumnRange&, const ColumnRange&) = default;
};

using NormParams = std::vector<ColumnRange>;

/// Per-column min/max of `m`.
inline NormParams fit_ranges(const Eigen::MatrixXd& m) {
    if (m.rows() == 0)
        throw ShapeError("cannot fit normalization on an empty matrix");
    NormParams params(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        params[static_cast<std::size_t>(c)] = {m.col(c).minCoeff(), m.col(c).maxCoeff()};
    return params;
}

/// Min-max scaling; a column whose fitted range is zero maps to 0.5.
inline Eigen::MatrixXd apply_ranges(const Eigen::MatrixXd& m, const NormParams& params) {
    if (static_cast<std::size_t>(m.cols()) != params.size())
        throw ShapeError("normalization expects " + std::to_string(params.size()) + " columns, got " +
                         std::to_string(m.cols()));
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const auto [lo, hi] = params[static_cast<std::size_t>(c)];
        if (hi > lo)
            out.col(c) = (m.col(c).array() - lo) / (hi - lo);
        else
            out.col(c).setConstant(0.5);
    }
    return out;
}

inline Eigen::MatrixXd invert_ranges(const Eigen::MatrixXd& m, const NormParams& params) {
    if (static_cast<std::size_t>(m.cols()) != params.size())
        throw ShapeError("denormalization column count mismatch");
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const auto [lo, hi] = params[static_cast<std::size_t>(c)];
        out.col(c) = lo + m.col(c).array() * (hi - lo);
    }
    return out;
}

/// Stand-in for a missing MPC slot.
inline constexpr Mpc kSentinelMpc{-200.0, 0.0, 0.0, 0.0, 0.0};

struct TopMpcs {
    std::vector<Mpc> mpcs;
    bool padded = false;
};

/// The n strongest MPCs, strongest first; ties go to the earlier arrival, then
/// the smaller azimuth. Short lists are padded with kSentinelMpc.
inline TopMpcs select_top_mpcs(std::span<const Mpc> mpcs, int n) {
    if (n <= 0)
        throw ConfigError("number of MPCs must be positive");
    if (mpcs.empty())
        throw ConfigError("select_top_mpcs needs at least one MPC");
    std::vector<Mpc> sorted(mpcs.begin(), mpcs.end());
    std::sort(sorted.begin(), sorted.end(), [](const Mpc& a, const Mpc& b) {
        if (a.rss_dbm != b.rss_dbm)
            return a.rss_dbm > b.rss_dbm;
        if (a.toa_s != b.toa_s)
            return a.toa_s < b.toa_s;
        return a.aoa_az_rad < b.aoa_az_rad;
    });
    TopMpcs top;
    top.padded = sorted.size() < static_cast<std::size_t>(n);
    sorted.resize(static_cast<std::size_t>(n), kSentinelMpc);
    top.mpcs = std::move(sorted);
    return top;
}

struct FeatureSet {
    FeatureMode mode = FeatureMode::AoaRssToa;
    int num_mpcs = 3;
    Eigen::MatrixXd matrix; // normalized, users x features
    NormParams norm_params;
    std::vector<std::string> column_names;
    std::vector<bool> padded; // per user; always false for AbsResponse
};

inline std::vector<std::string> feature_column_names(FeatureMode mode, int num_mpcs, int num_subcarriers = 0,
                                                     int num_antennas = 0) {
    std::vector<std::string> names;
    if (mode == FeatureMode::AbsResponse) {
        for (int k = 0; k < num_subcarriers; ++k)
            for (int m = 0; m < num_antennas; ++m)
                names.push_back("abs_h_k" + std::to_string(k) + "_m" + std::to_string(m));
        return names;
    }
    for (int s = 1; s <= num_mpcs; ++s) {
        const std::string slot = std::to_string(s);
        names.push_back("aoa_az_" + slot);
        if (params_per_mpc(mode) >= 2)
            names.push_back("rss_dbm_" + slot);
        if (params_per_mpc(mode) >= 3)
            names.push_back("toa_s_" + slot);
    }
    return names;
}

/// Unnormalized feature rows plus per-user padding flags.
struct RawFeatures {
    Eigen::MatrixXd matrix;
    std::vector<bool> padded;
    std::vector<std::string> column_names;
};

inline RawFeatures raw_features(std::span<const std::vector<Mpc>> per_user_mpcs,
                                std::span<const ChannelResponse> responses, FeatureMode mode, int num_mpcs) {
    if (num_mpcs <= 0)
        throw ConfigError("number of MPCs must be positive");
    RawFeatures raw;
    if (mode == FeatureMode::AbsResponse) {
        if (responses.empty())
            throw ShapeError("abs-response features need channel responses");
        if (!per_user_mpcs.empty() && per_user_mpcs.size() != responses.size())
            throw ShapeError("user count mismatch between MPC lists and responses");
        const int K = responses.front().num_subcarriers();
        const int M = responses.front().num_antennas();
        raw.matrix.resize(static_cast<Eigen::Index>(responses.size()), static_cast<Eigen::Index>(K) * M);
        for (std::size_t u = 0; u < responses.size(); ++u) {
            const auto& h = responses[u];
            if (h.num_subcarriers() != K || h.num_antennas() != M)
                throw ShapeError("channel responses have inconsistent dimensions");
            const auto e = h.entries();
            for (std::size_t i = 0; i < e.size(); ++i)
                raw.matrix(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) = std::abs(e[i]);
        }
        raw.padded.assign(responses.size(), false);
        raw.column_names = feature_column_names(mode, num_mpcs, K, M);
        return raw;
    }

    if (!responses.empty() && responses.size() != per_user_mpcs.size())
        throw ShapeError("user count mismatch between MPC lists and responses");
    const int per = params_per_mpc(mode);
    raw.matrix.resize(static_cast<Eigen::Index>(per_user_mpcs.size()), per * num_mpcs);
    raw.padded.resize(per_user_mpcs.size());
    for (std::size_t u = 0; u < per_user_mpcs.size(); ++u) {
        const auto top = select_top_mpcs(per_user_mpcs[u], num_mpcs);
        raw.padded[u] = top.padded;
        Eigen::Index c = 0;
        const auto row = static_cast<Eigen::Index>(u);
        for (const auto& mpc : top.mpcs) {
            raw.matrix(row, c++) = mpc.aoa_az_rad;
            if (per >= 2)
                raw.matrix(row, c++) = mpc.rss_dbm;
            if (per >= 3)
                raw.matrix(row, c++) = mpc.toa_s;
        }
    }
    raw.column_names = feature_column_names(mode, num_mpcs);
    return raw;
}

/// Builds the feature matrix for `mode` and min-max normalizes it. When
/// `norm_params` is given it is applied as-is (fit elsewhere); otherwise the
/// ranges are fit on this data.
inline FeatureSet assemble_features(std::span<const std::vector<Mpc>> per_user_mpcs,
                                    std::span<const ChannelResponse> responses, FeatureMode mode,
                                    int num_mpcs = 3, const std::optional<NormParams>& norm_params = std::nullopt) {
    auto raw = raw_features(per_user_mpcs, responses, mode, num_mpcs);
    FeatureSet fs;
    fs.mode = mode;
    fs.num_mpcs = num_mpcs;
    fs.norm_params = norm_params ? *norm_params : fit_ranges(raw.matrix);
    fs.matrix = apply_ranges(raw.matrix, fs.norm_params);
    fs.column_names = std::move(raw.column_names);
    fs.padded = std::move(raw.padded);
    return fs;
}

struct LabelMatrix {
    Eigen::MatrixXd matrix; // users x 2, normalized (x, y)
    NormParams norm_params;
};

inline Eigen::MatrixXd points_to_matrix(std::span<const Point2D> points) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()), 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = points[i].x;
        m(static_cast<Eigen::Index>(i), 1) = points[i].y;
    }
    return m;
}

inline std::vector<Point2D> matrix_to_points(const Eigen::MatrixXd& m) {
    if (m.cols() != 2)
        throw ShapeError("point matrix must have two columns");
    std::vector<Point2D> points(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        points[static_cast<std::size_t>(i)] = {m(i, 0), m(i, 1)};
    return points;
}

inline LabelMatrix normalize_labels(std::span<const Point2D> points,
                                    const std::optional<NormParams>& norm_params = std::nullopt) {
    if (points.empty())
        throw ShapeError("no label points");
    const auto raw = points_to_matrix(points);
    LabelMatrix labels;
    if (norm_params) {
        labels.norm_params = *norm_params;
    } else {
        if (std::all_of(points.begin(), points.end(), [&](Point2D p) { return p == points.front(); }))
            throw ShapeError("label normalization needs at least two distinct points");
        labels.norm_params = fit_ranges(raw);
    }
    labels.matrix = apply_ranges(raw, labels.norm_params);
    return labels;
}

inline std::vector<Point2D> denormalize_labels(const Eigen::MatrixXd& matrix, const NormParams& norm_params) {
    if (matrix.rows() == 0)
        throw ShapeError("no label rows");
    return matrix_to_points(invert_ranges(matrix, norm_params));
}

} // namespace mmloc
