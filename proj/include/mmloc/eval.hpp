// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/channel.hpp"
#include "mmloc/error.hpp"
#include "mmloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace mmloc {

struct CdfPoint {
    double error_m = 0.0;
    double fraction = 0.0;
};

struct EvalResult {
    std::vector<double> per_user_error_m;
    std::vector<CdfPoint> cdf;
    double p50_m = 0.0;
    double p90_m = 0.0;
    double mean_m = 0.0;
    int outlier_count = 0;
};

/// Euclidean distance per user, in meters.
inline std::vector<double> localization_errors(std::span<const Point2D> predicted, std::span<const Point2D> actual) {
    if (predicted.size() != actual.size())
        throw ShapeError("predicted and actual point counts differ");
    std::vector<double> errors(predicted.size());
    for (std::size_t i = 0; i < predicted.size(); ++i)
        errors[i] = distance(predicted[i], actual[i]);
    return errors;
}

/// Nearest-rank percentile of an ascending sample: the value at 1-based rank
/// ceil(percent * N / 100).
inline double nearest_rank(std::span<const double> sorted, int percent) {
    if (sorted.empty())
        throw ShapeError("percentile of an empty sample");
    const std::size_t n = sorted.size();
    std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

/// Errors above `outlier_threshold_m` are counted but kept in every statistic.
inline EvalResult empirical_cdf(std::span<const double> errors,
                                double outlier_threshold_m = std::numeric_limits<double>::infinity()) {
    if (errors.empty())
        throw ShapeError("empirical CDF of an empty sample");
    EvalResult r;
    r.per_user_error_m.assign(errors.begin(), errors.end());
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    r.cdf.reserve(sorted.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        r.cdf.push_back({sorted[i], static_cast<double>(i + 1) / n});
        sum += sorted[i];
        if (sorted[i] > outlier_threshold_m)
            ++r.outlier_count;
    }
    r.cdf.back().fraction = 1.0;
    r.p50_m = nearest_rank(sorted, 50);
    r.p90_m = nearest_rank(sorted, 90);
    r.mean_m = sum / n;
    return r;
}

/// Single-BS range-bearing fix: the point at range c*toa along the arrival azimuth.
inline Point2D los_geometric_fix(Point2D bs, double aoa_az, double toa_s) {
    if (!(toa_s > 0.0))
        throw ConfigError("time of arrival must be positive");
    const double range = kSpeedOfLight * toa_s;
    return {bs.x + range * std::cos(aoa_az), bs.y + range * std::sin(aoa_az)};
}

} // namespace mmloc
