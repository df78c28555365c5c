// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/error.hpp"
#include "mmloc/scene.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace mmloc {

inline constexpr double kSpeedOfLight = 299'792'458.0;

/// One multipath component as observed at the base station.
struct Mpc {
    double rss_dbm = 0.0;
    double toa_s = 0.0;
    double phase_rad = 0.0;  // [0, 2pi)
    double aoa_az_rad = 0.0; // (-pi, pi]
    double aoa_el_rad = 0.0; // always 0 for 2D scenes

    friend bool operator==(const Mpc&, const Mpc&) = default;
};

struct ChannelConfig {
    int num_antennas = 10;
    int num_subcarriers = 64;
    double bandwidth_hz = 500e6;
    double carrier_frequency_hz = 28e9;
    double element_spacing_wavelengths = 0.5;
};

inline void validate(const ChannelConfig& config) {
    if (config.num_antennas < 1)
        throw ConfigError("num_antennas must be >= 1");
    if (config.num_subcarriers < 1)
        throw ConfigError("num_subcarriers must be >= 1");
    if (!(config.bandwidth_hz > 0.0) || !(config.carrier_frequency_hz > 0.0))
        throw ConfigError("bandwidth and carrier frequency must be positive");
    if (!(config.element_spacing_wavelengths > 0.0))
        throw ConfigError("element spacing must be positive");
}

/// Frequency-domain response, subcarrier-major: (k, m) for subcarrier k, antenna m.
class ChannelResponse {
public:
    ChannelResponse(int num_subcarriers, int num_antennas)
        : rows_(num_subcarriers), cols_(num_antennas),
          entries_(static_cast<std::size_t>(num_subcarriers) * static_cast<std::size_t>(num_antennas)) {}

    int num_subcarriers() const noexcept { return rows_; }
    int num_antennas() const noexcept { return cols_; }

    std::complex<double>& operator()(int k, int m) { return entries_[index(k, m)]; }
    const std::complex<double>& operator()(int k, int m) const { return entries_[index(k, m)]; }

    std::span<const std::complex<double>> entries() const noexcept { return entries_; }

private:
    std::size_t index(int k, int m) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(m);
    }

    int rows_;
    int cols_;
    std::vector<std::complex<double>> entries_;
};

/// Free-space path loss in dB.
inline double fspl_db(double distance_m, double frequency_hz) {
    return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m * frequency_hz / kSpeedOfLight);
}

inline double wrap_phase(double rad) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(rad, two_pi);
    if (r < 0.0)
        r += two_pi;
    return r >= two_pi ? 0.0 : r;
}

/// Channel parameters of one traced path. The AOA is the bearing, seen from the
/// BS, of the first path vertex after the BS.
inline Mpc path_to_mpc(const RayPath& path, const Scene& scene, Point2D bs) {
    if (path.vertices.size() < 2 || !(path.length_m > 0.0))
        throw GeometryError("zero-length path");
    const Point2D first = path.vertices[1] - bs;
    if (norm(first) == 0.0)
        throw GeometryError("zero-length first path segment");

    Mpc mpc;
    mpc.toa_s = path.length_m / kSpeedOfLight;
    const double loss = std::max(0.0, fspl_db(path.length_m, scene.carrier_frequency_hz)) +
                        path.bounce_count * scene.reflection_loss_db;
    mpc.rss_dbm = scene.tx_power_dbm - loss;
    mpc.phase_rad = wrap_phase(-2.0 * std::numbers::pi * scene.carrier_frequency_hz * mpc.toa_s);
    double az = std::atan2(first.y, first.x);
    if (az <= -std::numbers::pi)
        az = std::numbers::pi;
    mpc.aoa_az_rad = az;
    mpc.aoa_el_rad = 0.0;
    return mpc;
}

/// Uniform linear array response, broadside at azimuth 0.
inline std::vector<std::complex<double>> steering_vector(const ChannelConfig& config, double aoa_az,
                                                         double aoa_el) {
    const double step = 2.0 * std::numbers::pi * config.element_spacing_wavelengths * std::sin(aoa_az) *
                        std::cos(aoa_el);
    std::vector<std::complex<double>> a(static_cast<std::size_t>(config.num_antennas));
    for (int m = 0; m < config.num_antennas; ++m)
        a[static_cast<std::size_t>(m)] = std::polar(1.0, step * m);
    return a;
}

/// h[k][m] = sum_l sqrt(rho_l / K) exp(j(phase_l + 2 pi k toa_l B / K)) a_l[m],
/// with rho_l the linear power in mW.
inline ChannelResponse channel_response(std::span<const Mpc> mpcs, const ChannelConfig& config) {
    validate(config);
    if (mpcs.empty())
        throw ConfigError("channel_response needs at least one MPC");
    const int K = config.num_subcarriers;
    const int M = config.num_antennas;
    ChannelResponse h(K, M);
    for (const auto& mpc : mpcs) {
        const double amplitude = std::sqrt(std::pow(10.0, mpc.rss_dbm / 10.0) / K);
        const auto a = steering_vector(config, mpc.aoa_az_rad, mpc.aoa_el_rad);
        for (int k = 0; k < K; ++k) {
            const double theta =
                mpc.phase_rad + 2.0 * std::numbers::pi * k * mpc.toa_s * config.bandwidth_hz / K;
            const std::complex<double> tap = std::polar(amplitude, theta);
            for (int m = 0; m < M; ++m)
                h(k, m) += tap * a[static_cast<std::size_t>(m)];
        }
    }
    return h;
}

} // namespace mmloc
