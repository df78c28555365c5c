// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/channel.hpp"
#include "mmloc/csv.hpp"
#include "mmloc/error.hpp"
#include "mmloc/scene.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace mmloc {

struct UserRecord {
    int user_id = 0;
    Point2D position;
    bool los = false;
    std::vector<Mpc> mpcs; // in traced-path order (ascending length)
};

/// Channel parameters of every grid user for one base station.
struct Dataset {
    std::vector<UserRecord> users;
    ChannelConfig channel;
};

inline ChannelConfig channel_config_for(const Scene& scene, int num_antennas = 10, int num_subcarriers = 64) {
    ChannelConfig c;
    c.num_antennas = num_antennas;
    c.num_subcarriers = num_subcarriers;
    c.bandwidth_hz = scene.bandwidth_hz;
    c.carrier_frequency_hz = scene.carrier_frequency_hz;
    validate(c);
    return c;
}

inline UserRecord trace_user(const Scene& scene, Point2D bs, const GridPoint& g) {
    UserRecord u;
    u.user_id = g.user_id;
    u.position = g.position;
    const auto paths = trace_paths(scene, bs, g.position);
    u.los = !paths.empty() && paths.front().bounce_count == 0;
    u.mpcs.reserve(paths.size());
    for (const auto& p : paths)
        u.mpcs.push_back(path_to_mpc(p, scene, bs));
    return u;
}

inline Dataset generate_dataset(const Scene& scene, std::size_t bs_index, const ChannelConfig& channel) {
    validate(scene);
    if (bs_index >= scene.base_stations.size())
        throw ConfigError("base station index " + std::to_string(bs_index) + " out of range");
    const Point2D bs = scene.base_stations[bs_index];
    Dataset d;
    d.channel = channel;
    for (const auto& g : build_grid(scene))
        d.users.push_back(trace_user(scene, bs, g));
    return d;
}

inline constexpr std::string_view kMpcHeader = "user_id,x,y,mpc_index,rss_dbm,toa_s,phase_rad,aoa_az_rad,aoa_el_rad";
inline constexpr std::string_view kUsersHeader = "user_id,x,y,los,num_mpcs";
inline constexpr std::string_view kResponseHeader = "user_id,subcarrier,antenna,re,im";

inline void write_mpc_table(const std::string& path, const Dataset& d) {
    csv::Writer w(path, kMpcHeader);
    for (const auto& u : d.users)
        for (std::size_t i = 0; i < u.mpcs.size(); ++i) {
            const auto& m = u.mpcs[i];
            w.row(u.user_id, u.position.x, u.position.y, i, m.rss_dbm, m.toa_s, m.phase_rad, m.aoa_az_rad,
                  m.aoa_el_rad);
        }
    w.close();
}

inline void write_users(const std::string& path, const Dataset& d) {
    csv::Writer w(path, kUsersHeader);
    for (const auto& u : d.users)
        w.row(u.user_id, u.position.x, u.position.y, u.los ? 1 : 0, u.mpcs.size());
    w.close();
}

/// Users ordered by id; MPC rows ordered by mpc_index within each user. Users
/// listed in the optional users file but absent from the MPC table keep an
/// empty MPC list.
inline std::vector<UserRecord> read_mpc_table(const std::string& path, const std::string& users_path = {}) {
    std::map<int, UserRecord> users;
    if (!users_path.empty()) {
        for (const auto& r : csv::read(users_path, kUsersHeader).rows) {
            UserRecord u;
            u.user_id = static_cast<int>(csv::parse_int(r[0]));
            u.position = {csv::parse_double(r[1]), csv::parse_double(r[2])};
            u.los = csv::parse_int(r[3]) != 0;
            users[u.user_id] = u;
        }
    }
    std::map<int, std::map<long long, Mpc>> mpcs;
    for (const auto& r : csv::read(path, kMpcHeader).rows) {
        const int id = static_cast<int>(csv::parse_int(r[0]));
        auto [it, inserted] = users.try_emplace(id);
        if (inserted) {
            it->second.user_id = id;
            it->second.position = {csv::parse_double(r[1]), csv::parse_double(r[2])};
        }
        Mpc m;
        m.rss_dbm = csv::parse_double(r[4]);
        m.toa_s = csv::parse_double(r[5]);
        m.phase_rad = csv::parse_double(r[6]);
        m.aoa_az_rad = csv::parse_double(r[7]);
        m.aoa_el_rad = csv::parse_double(r[8]);
        if (!mpcs[id].emplace(csv::parse_int(r[3]), m).second)
            throw ConfigError(path + ": duplicate mpc_index for user " + std::to_string(id));
    }
    std::vector<UserRecord> out;
    for (auto& [id, u] : users) {
        for (auto& [_, m] : mpcs[id])
            u.mpcs.push_back(m);
        out.push_back(std::move(u));
    }
    return out;
}

inline void write_responses(const std::string& path, const std::vector<UserRecord>& users, const ChannelConfig& config) {
    csv::Writer w(path, kResponseHeader);
    for (const auto& u : users) {
        if (u.mpcs.empty())
            continue;
        const auto h = channel_response(u.mpcs, config);
        for (int k = 0; k < h.num_subcarriers(); ++k)
            for (int m = 0; m < h.num_antennas(); ++m)
                w.row(u.user_id, k, m, h(k, m).real(), h(k, m).imag());
    }
    w.close();
}

} // namespace mmloc
