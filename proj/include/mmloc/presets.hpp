// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/error.hpp"
#include "mmloc/scene.hpp"

#include <array>
#include <string>
#include <string_view>

namespace mmloc {

// Parametric stand-ins for the urban ray-tracing scenes. All grids use 1 m
// spacing; user counts match the receiver grids they stand in for.
//
//   los-grid       990 users in a street canyon with a direct path to the BS
//   nlos-grid      540 users in the shadow of a building, reached by up to three reflections
//   los-subgrid    200-user patch of the los-grid street (24 m x 7 m)
//   response-grid  185-user LOS strip for channel-response features

enum class Band { Ghz5, Ghz28 };

inline Band parse_band(std::string_view s) {
    if (s == "5ghz" || s == "5")
        return Band::Ghz5;
    if (s == "28ghz" || s == "28")
        return Band::Ghz28;
    throw ConfigError("unknown band '" + std::string(s) + "' (expected 5ghz or 28ghz)");
}

/// 5 GHz pairs with 100 MHz of bandwidth, 28 GHz with 500 MHz.
inline void apply_band(Scene& scene, Band band) {
    scene.carrier_frequency_hz = band == Band::Ghz5 ? 5e9 : 28e9;
    scene.bandwidth_hz = band == Band::Ghz5 ? 100e6 : 500e6;
}

inline Polygon rect(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

inline constexpr std::array<std::string_view, 4> kPresetNames{"los-grid", "nlos-grid", "los-subgrid",
                                                              "response-grid"};

inline bool is_preset(std::string_view name) {
    for (auto n : kPresetNames)
        if (n == name)
            return true;
    return false;
}

inline Scene street_canyon(UeGrid grid) {
    Scene s;
    s.base_stations = {{0.0, 0.0}};
    s.obstacles = {rect(-30.0, 16.0, 20.0, 40.0), rect(24.0, 16.0, 75.0, 40.0),
                   rect(-30.0, -40.0, 35.0, -16.0), rect(39.0, -40.0, 75.0, -16.0)};
    s.ue_grid = grid;
    return s;
}

inline Scene preset_scene(std::string_view name, Band band = Band::Ghz28) {
    Scene s;
    if (name == "los-grid") {
        s = street_canyon({{8.0, -10.5}, 22, 45, 1.0});
    } else if (name == "los-subgrid") {
        s = street_canyon({{10.0, -3.5}, 8, 25, 1.0});
    } else if (name == "response-grid") {
        s = street_canyon({{10.0, -2.0}, 5, 37, 1.0});
    } else if (name == "nlos-grid") {
        s.base_stations = {{0.0, 0.0}};
        s.obstacles = {rect(20.0, -10.0, 30.0, 10.0), rect(-30.0, 32.0, 110.0, 52.0),
                       rect(-30.0, -52.0, 110.0, -32.0), rect(68.0, -30.0, 83.0, 30.0)};
        // Pillars along the facade behind the grid break up the multipath.
        for (double y = -26.0; y < 26.0; y += 9.0)
            s.obstacles.push_back(rect(66.2, y, 67.8, y + 3.0));
        s.ue_grid = {{36.0, -8.5}, 18, 30, 1.0};
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    apply_band(s, band);
    s.tx_power_dbm = 0.0;
    // Shadowed users rely on longer bounce chains.
    s.max_reflection_order = name == "nlos-grid" ? 3 : 2;
    s.reflection_loss_db = 6.0;
    return s;
}

} // namespace mmloc
