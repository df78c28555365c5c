// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/error.hpp"
#include "mmloc/scene.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace mmloc {

inline nlohmann::json point_to_json(Point2D p) { return nlohmann::json::array({p.x, p.y}); }

inline Point2D point_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError("a point must be a two-element numeric array [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json to_json(const Scene& scene) {
    nlohmann::json j;
    j["base_stations"] = nlohmann::json::array();
    for (auto p : scene.base_stations)
        j["base_stations"].push_back(point_to_json(p));
    j["obstacles"] = nlohmann::json::array();
    for (const auto& poly : scene.obstacles) {
        auto arr = nlohmann::json::array();
        for (auto p : poly)
            arr.push_back(point_to_json(p));
        j["obstacles"].push_back(std::move(arr));
    }
    j["ue_grid"] = {{"origin", point_to_json(scene.ue_grid.origin)},
                    {"rows", scene.ue_grid.rows},
                    {"cols", scene.ue_grid.cols},
                    {"spacing", scene.ue_grid.spacing}};
    j["carrier_frequency_hz"] = scene.carrier_frequency_hz;
    j["bandwidth_hz"] = scene.bandwidth_hz;
    j["tx_power_dbm"] = scene.tx_power_dbm;
    j["max_reflection_order"] = scene.max_reflection_order;
    j["reflection_loss_db"] = scene.reflection_loss_db;
    return j;
}

/// Parses and validates a scene document. tx_power_dbm, max_reflection_order
/// and reflection_loss_db fall back to their defaults when absent. Extra
/// top-level keys other than "name" and "channel" are rejected.
inline Scene scene_from_json(const nlohmann::json& j) {
    if (!j.is_object())
        throw ConfigError("scene document must be a JSON object");
    static const std::set<std::string> known{"base_stations", "obstacles",    "ue_grid",
                                             "carrier_frequency_hz", "bandwidth_hz", "tx_power_dbm",
                                             "max_reflection_order", "reflection_loss_db", "name", "channel"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw ConfigError("unknown scene key '" + key + "'");
    for (const char* key : {"base_stations", "obstacles", "ue_grid", "carrier_frequency_hz", "bandwidth_hz"})
        if (!j.contains(key))
            throw ConfigError(std::string("scene is missing '") + key + "'");

    try {
        Scene s;
        for (const auto& p : j.at("base_stations"))
            s.base_stations.push_back(point_from_json(p));
        for (const auto& poly : j.at("obstacles")) {
            Polygon pg;
            for (const auto& p : poly)
                pg.push_back(point_from_json(p));
            s.obstacles.push_back(std::move(pg));
        }
        const auto& g = j.at("ue_grid");
        s.ue_grid.origin = point_from_json(g.at("origin"));
        s.ue_grid.rows = g.at("rows").get<int>();
        s.ue_grid.cols = g.at("cols").get<int>();
        s.ue_grid.spacing = g.at("spacing").get<double>();
        s.carrier_frequency_hz = j.at("carrier_frequency_hz").get<double>();
        s.bandwidth_hz = j.at("bandwidth_hz").get<double>();
        s.tx_power_dbm = j.value("tx_power_dbm", s.tx_power_dbm);
        s.max_reflection_order = j.value("max_reflection_order", s.max_reflection_order);
        s.reflection_loss_db = j.value("reflection_loss_db", s.reflection_loss_db);
        if (s.base_stations.empty())
            throw ConfigError("scene needs at least one base station");
        validate(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed scene: ") + e.what());
    }
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out)
        throw IoError("failed writing " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace mmloc
