// SPDX-License-Identifier: Apache-2.0
// mmloc: generate ray-traced datasets, train localizers, evaluate them.

#include "mmloc/dataset.hpp"
#include "mmloc/experiment.hpp"
#include "mmloc/model_io.hpp"
#include "mmloc/presets.hpp"
#include "mmloc/scene_io.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mmloc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string content_hash(std::string_view bytes) { return "fnv1a64:" + hex64(fnv1a64(bytes)); }

// SOURCE_DATE_EPOCH pins the clock for reproducible manifests.
std::string utc_now() {
    std::time_t t = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
        t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!(f << text) || (f.close(), !f))
        throw IoError("cannot write " + path);
}

std::string join(const fs::path& dir, const char* name) { return (dir / name).string(); }

void prepare_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string());
}

/// Fills run_id and timestamps and writes manifest.json. The run id hashes
/// everything except the timestamps, plus the output directory itself.
void write_manifest(const fs::path& out, json manifest, const std::string& started) {
    manifest["outputs"].push_back("manifest.json");
    const auto where = fs::weakly_canonical(fs::absolute(out)).string();
    manifest["run_id"] = hex64(fnv1a64(manifest.dump() + '\n' + where));
    manifest["timestamps"] = {{"started_utc", started}, {"finished_utc", utc_now()}};
    write_json_file(join(out, "manifest.json"), manifest);
}

json base_manifest(const std::string& command, std::uint64_t seed) {
    return {{"tool", "mmloc"}, {"command", command}, {"seed", seed}, {"outputs", json::array()}};
}

// ---------------------------------------------------------------- scene

struct SceneSource {
    Scene scene;
    std::string text; // the exact bytes the hash covers
};

SceneSource load_scene(const std::string& spec, const std::string& band) {
    SceneSource src;
    if (is_preset(spec)) {
        src.scene = preset_scene(spec, parse_band(band.empty() ? "28ghz" : band));
        auto j = to_json(src.scene);
        j["name"] = spec;
        src.text = j.dump(2) + '\n';
        return src;
    }
    src.text = read_text_file(spec);
    json j;
    try {
        j = json::parse(src.text);
    } catch (const json::parse_error& e) {
        throw ConfigError(spec + ": " + e.what());
    }
    src.scene = scene_from_json(j);
    if (!band.empty()) {
        apply_band(src.scene, parse_band(band));
        auto k = to_json(src.scene);
        if (j.contains("name"))
            k["name"] = j["name"];
        src.text = k.dump(2) + '\n';
    }
    return src;
}

// ---------------------------------------------------------------- dataset on disk

struct LoadedData {
    std::vector<UserRecord> users;
    ChannelConfig channel;
    Scene scene;
    std::string scene_hash;
};

ChannelConfig channel_from_json(const json& j) {
    ChannelConfig c;
    c.num_antennas = j.at("num_antennas").get<int>();
    c.num_subcarriers = j.at("num_subcarriers").get<int>();
    c.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    c.carrier_frequency_hz = j.at("carrier_frequency_hz").get<double>();
    c.element_spacing_wavelengths = j.at("element_spacing_wavelengths").get<double>();
    validate(c);
    return c;
}

json channel_to_json(const ChannelConfig& c) {
    return {{"num_antennas", c.num_antennas},
            {"num_subcarriers", c.num_subcarriers},
            {"bandwidth_hz", c.bandwidth_hz},
            {"carrier_frequency_hz", c.carrier_frequency_hz},
            {"element_spacing_wavelengths", c.element_spacing_wavelengths}};
}

LoadedData load_data(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw IoError("dataset directory " + dir.string() + " does not exist");
    LoadedData d;
    const auto meta = read_json_file(join(dir, "dataset.json"));
    try {
        d.channel = channel_from_json(meta.at("channel"));
        d.scene_hash = meta.at("scene_hash").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(join(dir, "dataset.json") + ": " + e.what());
    }
    const auto scene_text = read_text_file(join(dir, "scene.json"));
    if (content_hash(scene_text) != d.scene_hash)
        throw ConfigError("scene.json does not match the hash recorded in dataset.json");
    d.scene = scene_from_json(json::parse(scene_text));
    d.users = read_mpc_table(join(dir, "mpcs.csv"), join(dir, "users.csv"));
    return d;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::string scene;
    std::string band;
    std::size_t bs_index = 0;
    int antennas = 10;
    int subcarriers = 64;
    bool no_responses = false;
    std::uint64_t seed = 0;
    std::string out;
};

int run_generate(const GenerateArgs& a) {
    const auto started = utc_now();
    const auto src = load_scene(a.scene, a.band);
    const auto channel = channel_config_for(src.scene, a.antennas, a.subcarriers);
    const auto data = generate_dataset(src.scene, a.bs_index, channel);
    const fs::path out(a.out);
    prepare_out_dir(out);

    auto manifest = base_manifest("generate", a.seed);
    auto& outputs = manifest["outputs"];
    write_text(join(out, "scene.json"), src.text);
    outputs.push_back("scene.json");
    write_mpc_table(join(out, "mpcs.csv"), data);
    outputs.push_back("mpcs.csv");
    write_users(join(out, "users.csv"), data);
    outputs.push_back("users.csv");
    if (!a.no_responses) {
        write_responses(join(out, "responses.csv"), data.users, channel);
        outputs.push_back("responses.csv");
    }
    std::size_t rows = 0;
    int los = 0;
    for (const auto& u : data.users) {
        rows += u.mpcs.size();
        los += u.los ? 1 : 0;
    }
    const auto hash = content_hash(src.text);
    write_json_file(join(out, "dataset.json"), {{"scene_hash", hash},
                                                {"bs_index", a.bs_index},
                                                {"channel", channel_to_json(channel)},
                                                {"num_users", data.users.size()},
                                                {"num_los_users", los},
                                                {"num_mpc_rows", rows}});
    outputs.push_back("dataset.json");

    manifest["scene"] = a.scene;
    manifest["scene_hash"] = hash;
    manifest["settings"] = {{"band", a.band}, {"bs_index", a.bs_index}, {"channel", channel_to_json(channel)},
                            {"responses", !a.no_responses}};
    write_manifest(out, manifest, started);
    std::cout << "generated " << data.users.size() << " users (" << los << " LOS), " << rows << " MPC rows -> "
              << out.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string data;
    std::string mode = "aoa-rss-toa";
    int h1 = 30;
    int h2 = 30;
    double lr = 0.1;
    std::string activation = "tansig";
    bool hyperopt = false;
    int budget = 30;
    int n_init = 5;
    int candidates = 1024;
    int epochs = 2000;
    int patience = 100;
    std::string batch = "16";
    std::string split = "full";
    int num_mpcs = 3;
    std::uint64_t seed = 0;
    std::string out;
};

int parse_batch(const std::string& s) {
    if (s == "full")
        return 0;
    const auto n = csv::parse_int(s);
    if (n < 1)
        throw ConfigError("--batch must be 'full' or a positive integer");
    return static_cast<int>(n);
}

double parse_split(const std::string& s) {
    if (s == "full")
        return 0.0;
    constexpr std::string_view prefix = "holdout:";
    if (s.rfind(prefix, 0) == 0) {
        const double f = csv::parse_double(std::string_view(s).substr(prefix.size()));
        if (f > 0.0 && f < 1.0)
            return f;
    }
    throw ConfigError("--split must be 'full' or 'holdout:<fraction in (0,1)>'");
}

std::string describe(const HyperConfig& h) {
    return "h1=" + std::to_string(h.h1) + " h2=" + std::to_string(h.h2) + " lr=" + csv::format_double(h.learning_rate) +
           " activation=" + std::string(to_string(h.activation));
}

json hyper_to_json(const HyperConfig& h) {
    return {{"h1", h.h1}, {"h2", h.h2}, {"learning_rate", h.learning_rate},
            {"activation", std::string(to_string(h.activation))}};
}

void write_features(const std::string& path, const Prepared& p) {
    std::string header = "user_id";
    for (const auto& c : p.features.column_names)
        header += "," + c;
    csv::Writer w(path, header);
    for (Eigen::Index r = 0; r < p.features.matrix.rows(); ++r) {
        std::vector<double> row{static_cast<double>(p.user_ids[static_cast<std::size_t>(r)])};
        for (Eigen::Index c = 0; c < p.features.matrix.cols(); ++c)
            row.push_back(p.features.matrix(r, c));
        w.row(row);
    }
    w.close();
}

void write_labels(const std::string& path, const Prepared& p) {
    csv::Writer w(path, "user_id,x,y,x_norm,y_norm");
    for (std::size_t i = 0; i < p.user_ids.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        w.row(p.user_ids[i], p.positions[i].x, p.positions[i].y, p.labels.matrix(r, 0), p.labels.matrix(r, 1));
    }
    w.close();
}

int run_train(const TrainArgs& a) {
    const auto started = utc_now();
    const auto mode = parse_feature_mode(a.mode);
    const auto holdout = parse_split(a.split);
    TrainSettings settings;
    settings.max_epochs = a.epochs;
    settings.patience = a.patience;
    settings.batch_size = parse_batch(a.batch);
    if (a.num_mpcs < 1)
        throw ConfigError("--num-mpcs must be positive");

    const auto data = load_data(a.data);
    const auto prep = prepare(data.users, data.channel, mode, a.num_mpcs);
    const auto& X = prep.features.matrix;
    const auto& Y = prep.labels.matrix;
    const auto split = make_split(X.rows(), holdout, a.seed);

    std::vector<Trial> trials;
    HyperConfig chosen;
    std::uint64_t train_seed = a.seed;
    if (a.hyperopt) {
        OptimizeOptions opts;
        opts.budget = a.budget;
        opts.n_init = std::min(a.n_init, a.budget);
        opts.seed = a.seed;
        opts.candidates = a.candidates;
        const auto result = optimize(HyperSpace{}, training_objective(X, Y, split, settings), opts);
        trials = result.log;
        if (result.best.diverged()) {
            std::cerr << "mmloc: every hyperopt trial diverged\n";
            return kExitDivergence;
        }
        chosen = result.best.config;
        train_seed = result.best.seed;
    } else {
        chosen = {a.h1, a.h2, a.lr, parse_activation(a.activation)};
        if (chosen.h1 < 1 || chosen.h2 < 1)
            throw ConfigError("hidden layer sizes must be positive");
        if (!(chosen.learning_rate > 0.0))
            throw ConfigError("learning rate must be positive");
    }

    const Eigen::MatrixXd xtr = X(split.train, Eigen::all);
    const Eigen::MatrixXd ytr = Y(split.train, Eigen::all);
    TrainResult trained;
    try {
        trained = train_localizer(xtr, ytr, chosen, settings, train_seed);
    } catch (const DivergenceError& e) {
        std::cerr << "mmloc: " << e.what() << " with " << describe(chosen) << '\n';
        return kExitDivergence;
    }
    if (!a.hyperopt) {
        Trial t;
        t.config = chosen;
        t.seed = train_seed;
        t.cost = split.test == split.train ? trained.loss_history.back()
                                           : mse_loss(forward(trained.model, X(split.test, Eigen::all)),
                                                      Y(split.test, Eigen::all));
        trials.push_back(t);
    }

    const fs::path out(a.out);
    prepare_out_dir(out);
    auto manifest = base_manifest("train", a.seed);
    auto& outputs = manifest["outputs"];
    write_json_file(join(out, "model.json"), to_json(trained.model, preprocessing_of(prep)));
    outputs.push_back("model.json");
    write_features(join(out, "features.csv"), prep);
    outputs.push_back("features.csv");
    write_labels(join(out, "labels.csv"), prep);
    outputs.push_back("labels.csv");
    write_json_file(join(out, "norm_params.json"), {{"feature_columns", prep.features.column_names},
                                                    {"feature_norm", ranges_to_json(prep.features.norm_params)},
                                                    {"label_norm", ranges_to_json(prep.labels.norm_params)}});
    outputs.push_back("norm_params.json");
    {
        csv::Writer w(join(out, "trials.csv"), "trial,h1,h2,learning_rate,activation,cost,seed");
        for (const auto& t : trials)
            w.row(t.index, t.config.h1, t.config.h2, t.config.learning_rate, to_string(t.config.activation),
                  t.cost ? csv::format_double(*t.cost) : std::string("DIVERGED"), t.seed);
        w.close();
        outputs.push_back("trials.csv");
    }
    {
        csv::Writer w(join(out, "loss_history.csv"), "epoch,mse");
        for (std::size_t i = 0; i < trained.loss_history.size(); ++i)
            w.row(i, trained.loss_history[i]);
        w.close();
        outputs.push_back("loss_history.csv");
    }

    manifest["data"] = a.data;
    manifest["scene_hash"] = data.scene_hash;
    manifest["feature_mode"] = std::string(to_string(mode));
    manifest["hyperparameters"] = hyper_to_json(chosen);
    manifest["settings"] = {{"hyperopt", a.hyperopt},
                            {"budget", a.hyperopt ? a.budget : 1},
                            {"n_init", a.hyperopt ? std::min(a.n_init, a.budget) : 1},
                            {"epochs", a.epochs},
                            {"patience", a.patience},
                            {"batch", a.batch},
                            {"split", a.split},
                            {"num_mpcs", a.num_mpcs},
                            {"train_seed", train_seed},
                            {"users", prep.user_ids.size()},
                            {"excluded_padded", prep.excluded_padded},
                            {"excluded_no_path", prep.excluded_no_path}};
    write_manifest(out, manifest, started);
    std::cout << "trained " << describe(chosen) << " on " << split.train.size() << " users, final mse "
              << csv::format_double(trained.loss_history.back()) << " -> " << out.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string model;
    std::string data;
    std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
    const auto started = utc_now();
    const auto loaded = model_from_json(read_json_file(a.model));
    if (!loaded.preprocessing)
        throw ConfigError(a.model + ": model has no preprocessing block");
    const auto& pre = *loaded.preprocessing;
    const auto data = load_data(a.data);
    const auto width = pre.mode == FeatureMode::AbsResponse
                           ? data.channel.num_subcarriers * data.channel.num_antennas
                           : params_per_mpc(pre.mode) * pre.num_mpcs;
    if (width != loaded.model.num_inputs() || static_cast<std::size_t>(width) != pre.feature_norm.size())
        throw ShapeError("model expects " + std::to_string(loaded.model.num_inputs()) + " features but the dataset gives " +
                         std::to_string(width));
    const auto prep = prepare(data.users, data.channel, pre.mode, pre.num_mpcs, pre.feature_norm, pre.label_norm);
    const auto predicted = predict_positions(loaded.model, prep.features.matrix, pre.label_norm);
    const double threshold = outlier_threshold(data.scene);
    const auto result = evaluate_positions(predicted, prep.positions, threshold);

    const fs::path out(a.out);
    prepare_out_dir(out);
    auto manifest = base_manifest("evaluate", loaded.model.rng_seed);
    auto& outputs = manifest["outputs"];
    {
        csv::Writer w(join(out, "location_map.csv"), "user_id,actual_x,actual_y,pred_x,pred_y,error_m,outlier");
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            const double e = result.per_user_error_m[i];
            w.row(prep.user_ids[i], prep.positions[i].x, prep.positions[i].y, predicted[i].x, predicted[i].y, e,
                  e > threshold ? 1 : 0);
        }
        w.close();
        outputs.push_back("location_map.csv");
    }
    {
        csv::Writer w(join(out, "cdf.csv"), "error_m,fraction");
        for (const auto& p : result.cdf)
            w.row(p.error_m, p.fraction);
        w.close();
        outputs.push_back("cdf.csv");
    }
    write_json_file(join(out, "summary.json"), {{"feature_mode", std::string(to_string(pre.mode))},
                                                {"num_users", predicted.size()},
                                                {"p50_m", result.p50_m},
                                                {"p90_m", result.p90_m},
                                                {"mean_m", result.mean_m},
                                                {"outlier_threshold_m", threshold},
                                                {"outlier_count", result.outlier_count},
                                                {"excluded_padded", prep.excluded_padded},
                                                {"excluded_no_path", prep.excluded_no_path}});
    outputs.push_back("summary.json");

    manifest["model"] = a.model;
    manifest["model_hash"] = content_hash(read_text_file(a.model));
    manifest["data"] = a.data;
    manifest["scene_hash"] = data.scene_hash;
    manifest["feature_mode"] = std::string(to_string(pre.mode));
    manifest["hyperparameters"] = {{"layer_sizes", loaded.model.layer_sizes},
                                   {"activation", std::string(to_string(loaded.model.hidden_activation))}};
    write_manifest(out, manifest, started);
    std::cout << "evaluated " << predicted.size() << " users: p50 " << csv::format_double(result.p50_m) << " m, p90 "
              << csv::format_double(result.p90_m) << " m -> " << out.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- scene

int run_scene(const std::string& preset, const std::string& band, const std::string& out) {
    if (!is_preset(preset))
        throw ConfigError("unknown preset '" + preset + "'");
    write_text(out, load_scene(preset, band).text);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmloc: mmWave localization with ray-traced channels and a neural network"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Trace a scene and write MPC and response tables");
    g->add_option("--scene", gen.scene, "Scene JSON file or preset name")->required();
    g->add_option("--band", gen.band, "5ghz or 28ghz (overrides the scene's frequency and bandwidth)");
    g->add_option("--bs-index", gen.bs_index, "Base station to trace from");
    g->add_option("--antennas", gen.antennas, "Receive array size");
    g->add_option("--subcarriers", gen.subcarriers, "OFDM subcarriers");
    g->add_flag("--no-responses", gen.no_responses, "Skip responses.csv");
    g->add_option("--seed", gen.seed, "Recorded in the manifest; generation is deterministic");
    g->add_option("--out", gen.out, "Output directory")->required();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train a localizer on a generated dataset");
    t->add_option("--data", tr.data, "Directory written by 'generate'")->required();
    t->add_option("--mode", tr.mode, "aoa, aoa-rss, aoa-rss-toa or abs-response");
    t->add_option("--h1", tr.h1, "First hidden layer width");
    t->add_option("--h2", tr.h2, "Second hidden layer width");
    t->add_option("--lr", tr.lr, "Learning rate");
    t->add_option("--activation", tr.activation, "tansig, logsig, purelin, poslin or radbas");
    t->add_flag("--hyperopt", tr.hyperopt, "Choose h1, h2, lr and activation by Bayesian optimization");
    t->add_option("--budget", tr.budget, "Hyperopt trials");
    t->add_option("--n-init", tr.n_init, "Random trials before the surrogate takes over");
    t->add_option("--candidates", tr.candidates, "Acquisition candidates per trial");
    t->add_option("--epochs", tr.epochs, "Maximum epochs");
    t->add_option("--patience", tr.patience, "Epochs without improvement before stopping");
    t->add_option("--batch", tr.batch, "'full' or a minibatch size");
    t->add_option("--split", tr.split, "'full' or 'holdout:<fraction>'");
    t->add_option("--num-mpcs", tr.num_mpcs, "MPC slots per user");
    t->add_option("--seed", tr.seed, "Seed for every random stream");
    t->add_option("--out", tr.out, "Output directory")->required();

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Localize every user of a dataset with a trained model");
    e->add_option("--model", ev.model, "model.json written by 'train'")->required();
    e->add_option("--data", ev.data, "Directory written by 'generate'")->required();
    e->add_option("--out", ev.out, "Output directory")->required();

    std::string preset, band, scene_out;
    auto* s = app.add_subcommand("scene", "Write a preset scene as JSON");
    s->add_option("--preset", preset, "Preset name")->required();
    s->add_option("--band", band, "5ghz or 28ghz");
    s->add_option("--out", scene_out, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*g)
            return run_generate(gen);
        if (*t)
            return run_train(tr);
        if (*e)
            return run_evaluate(ev);
        return run_scene(preset, band, scene_out);
    } catch (const DivergenceError& err) {
        std::cerr << "mmloc: " << err.what() << '\n';
        return kExitDivergence;
    } catch (const IoError& err) {
        std::cerr << "mmloc: I/O error: " << err.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& err) {
        std::cerr << "mmloc: " << err.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& err) {
        std::cerr << "mmloc: " << err.what() << '\n';
        return kExitConfig;
    }
}
