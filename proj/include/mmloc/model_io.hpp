// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/error.hpp"
#include "mmloc/features.hpp"
#include "mmloc/neuralnet.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace mmloc {

inline constexpr int kModelFormatVersion = 1;

/// How raw channel data is turned into network inputs and how outputs map back
/// to meters. Stored with the model so evaluation reproduces training exactly.
struct Preprocessing {
    FeatureMode mode = FeatureMode::AoaRssToa;
    int num_mpcs = 3;
    NormParams feature_norm;
    NormParams label_norm;
};

inline nlohmann::json ranges_to_json(const NormParams& p) {
    auto arr = nlohmann::json::array();
    for (const auto& r : p)
        arr.push_back({{"min", r.min}, {"max", r.max}});
    return arr;
}

inline NormParams ranges_from_json(const nlohmann::json& j) {
    NormParams p;
    for (const auto& r : j)
        p.push_back({r.at("min").get<double>(), r.at("max").get<double>()});
    return p;
}

inline nlohmann::json to_json(const MlpModel& model, const std::optional<Preprocessing>& pre = std::nullopt) {
    check_model(model);
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["layer_sizes"] = model.layer_sizes;
    j["activation"] = std::string(to_string(model.hidden_activation));
    j["seed"] = model.rng_seed;
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const auto& w = model.weights[l];
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                flat.push_back(w(r, c));
        j["weights"].push_back(flat);
        j["biases"].push_back(std::vector<double>(model.biases[l].data(), model.biases[l].data() + model.biases[l].size()));
    }
    if (pre) {
        j["preprocessing"] = {{"mode", std::string(to_string(pre->mode))},
                              {"num_mpcs", pre->num_mpcs},
                              {"feature_norm", ranges_to_json(pre->feature_norm)},
                              {"label_norm", ranges_to_json(pre->label_norm)}};
    }
    return j;
}

struct LoadedModel {
    MlpModel model;
    std::optional<Preprocessing> preprocessing;
};

inline LoadedModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion)
            throw ConfigError("unsupported model format_version");
        LoadedModel out;
        auto& m = out.model;
        m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
        m.hidden_activation = parse_activation(j.at("activation").get<std::string>());
        m.rng_seed = j.at("seed").get<std::uint64_t>();
        const auto& ws = j.at("weights");
        const auto& bs = j.at("biases");
        if (m.layer_sizes.size() < 2 || ws.size() + 1 != m.layer_sizes.size() || bs.size() != ws.size())
            throw ShapeError("model layer count is inconsistent");
        for (std::size_t l = 0; l < ws.size(); ++l) {
            const auto flat = ws[l].get<std::vector<double>>();
            const auto bias = bs[l].get<std::vector<double>>();
            const int rows = m.layer_sizes[l + 1];
            const int cols = m.layer_sizes[l];
            if (flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) ||
                bias.size() != static_cast<std::size_t>(rows))
                throw ShapeError("weight array size does not match layer sizes at layer " + std::to_string(l));
            Eigen::MatrixXd w(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c)
                    w(r, c) = flat[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
            m.weights.push_back(std::move(w));
            m.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), rows));
        }
        if (j.contains("preprocessing")) {
            const auto& p = j.at("preprocessing");
            Preprocessing pre;
            pre.mode = parse_feature_mode(p.at("mode").get<std::string>());
            pre.num_mpcs = p.at("num_mpcs").get<int>();
            pre.feature_norm = ranges_from_json(p.at("feature_norm"));
            pre.label_norm = ranges_from_json(p.at("label_norm"));
            out.preprocessing = pre;
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed model file: ") + e.what());
    }
}

} // namespace mmloc
