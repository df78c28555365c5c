// SPDX-License-Identifier: Apache-2.0
#include "gradcheck.hpp"

#include "mmloc/dataset.hpp"
#include "mmloc/model_io.hpp"
#include "mmloc/presets.hpp"
#include "mmloc/scene_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace mmloc;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mmloc_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

} // namespace

TEST(Csv, ShortestRoundTripFormatting) {
    for (double v : {0.1, -101.39094384872776, 1.6678204759907603e-08, 0.0, 1e300, -0.0})
        EXPECT_EQ(csv::parse_double(csv::format_double(v)), v);
    EXPECT_EQ(csv::format_double(0.5), "0.5");
    EXPECT_THROW(csv::parse_double("1.5x"), ConfigError);
    EXPECT_THROW(csv::parse_int("3.0"), ConfigError);
}

TEST(SceneJson, RoundTripsPresets) {
    for (auto name : kPresetNames) {
        const auto s = preset_scene(name);
        const auto back = scene_from_json(nlohmann::json::parse(to_json(s).dump()));
        EXPECT_EQ(back.base_stations, s.base_stations);
        EXPECT_EQ(back.obstacles, s.obstacles);
        EXPECT_EQ(back.ue_grid.rows, s.ue_grid.rows);
        EXPECT_EQ(back.carrier_frequency_hz, s.carrier_frequency_hz);
        EXPECT_EQ(to_json(back), to_json(s));
    }
}

TEST(SceneJson, RejectsBadDocuments) {
    auto j = to_json(preset_scene("los-subgrid"));
    auto unknown = j;
    unknown["colour"] = "red";
    EXPECT_THROW(scene_from_json(unknown), ConfigError);
    auto missing = j;
    missing.erase("ue_grid");
    EXPECT_THROW(scene_from_json(missing), ConfigError);
    auto bad_point = j;
    bad_point["base_stations"][0] = {1, 2, 3};
    EXPECT_THROW(scene_from_json(bad_point), ConfigError);
    auto clockwise = j;
    auto poly = clockwise["obstacles"][0];
    std::reverse(poly.begin(), poly.end());
    clockwise["obstacles"][0] = poly;
    EXPECT_THROW(scene_from_json(clockwise), ConfigError);
    auto named = j;
    named["name"] = "patch";
    EXPECT_NO_THROW(scene_from_json(named));
}

TEST_F(TempDir, JsonFileErrors) {
    EXPECT_THROW(read_json_file(path("absent.json")), IoError);
    write_file(path("broken.json"), "{\"a\": ");
    EXPECT_THROW(read_json_file(path("broken.json")), ConfigError);
    EXPECT_THROW(write_json_file((dir_ / "no" / "such" / "x.json").string(), {}), IoError);
}

TEST_F(TempDir, MpcTableRoundTrip) {
    const auto scene = preset_scene("nlos-grid");
    const auto d = generate_dataset(scene, 0, channel_config_for(scene));
    write_mpc_table(path("mpcs.csv"), d);
    write_users(path("users.csv"), d);
    const auto back = read_mpc_table(path("mpcs.csv"), path("users.csv"));
    ASSERT_EQ(back.size(), d.users.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].user_id, d.users[i].user_id);
        EXPECT_EQ(back[i].position, d.users[i].position);
        EXPECT_EQ(back[i].los, d.users[i].los);
        EXPECT_EQ(back[i].mpcs, d.users[i].mpcs);
    }
}

TEST_F(TempDir, MpcTableValidation) {
    write_file(path("wrong.csv"), "user_id,x,y\n1,2,3\n");
    EXPECT_THROW(read_mpc_table(path("wrong.csv")), ConfigError);
    write_file(path("dup.csv"), std::string(kMpcHeader) + "\n0,1,1,0,-60,1e-7,0,0,0\n0,1,1,0,-61,1e-7,0,0,0\n");
    EXPECT_THROW(read_mpc_table(path("dup.csv")), ConfigError);
    write_file(path("short.csv"), std::string(kMpcHeader) + "\n0,1,1,0,-60\n");
    EXPECT_THROW(read_mpc_table(path("short.csv")), ConfigError);
    EXPECT_THROW(read_mpc_table(path("none.csv")), IoError);
}

TEST_F(TempDir, ResponsesMatchChannelModel) {
    const auto scene = preset_scene("response-grid");
    auto d = generate_dataset(scene, 0, channel_config_for(scene, 4, 8));
    d.users.resize(3);
    write_responses(path("responses.csv"), d.users, d.channel);
    const auto t = csv::read(path("responses.csv"), kResponseHeader);
    ASSERT_EQ(t.rows.size(), 3u * 8u * 4u);
    const auto h = channel_response(d.users[1].mpcs, d.channel);
    const auto& row = t.rows[32 + 2 * 4 + 3];
    EXPECT_EQ(csv::parse_int(row[1]), 2);
    EXPECT_EQ(csv::parse_int(row[2]), 3);
    EXPECT_EQ(csv::parse_double(row[3]), h(2, 3).real());
    EXPECT_EQ(csv::parse_double(row[4]), h(2, 3).imag());
}

TEST(ModelJson, RoundTripIsExact) {
    const auto p = testkit::random_grad_problem(Activation::Logsig, 21);
    Preprocessing pre{FeatureMode::AoaRss, 3, {{0, 1}, {-2, 5}}, {{10, 34}, {-3, 4}}};
    const auto text = to_json(p.model, pre).dump(2);
    const auto loaded = model_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(loaded.model.layer_sizes, p.model.layer_sizes);
    EXPECT_EQ(loaded.model.weights, p.model.weights);
    EXPECT_EQ(loaded.model.biases, p.model.biases);
    EXPECT_EQ(loaded.model.hidden_activation, Activation::Logsig);
    ASSERT_TRUE(loaded.preprocessing);
    EXPECT_EQ(loaded.preprocessing->mode, FeatureMode::AoaRss);
    EXPECT_EQ(loaded.preprocessing->label_norm[0].max, 34.0);
    EXPECT_EQ(forward(loaded.model, p.x), forward(p.model, p.x));
    EXPECT_EQ(to_json(loaded.model, loaded.preprocessing).dump(2), text);
}

TEST(ModelJson, RejectsInconsistentShapes) {
    const auto m = make_mlp({2, 3, 2}, Activation::Tansig, 1);
    auto j = to_json(m);
    j["layer_sizes"] = {2, 4, 2};
    EXPECT_THROW(model_from_json(j), ShapeError);
    auto v = to_json(m);
    v["format_version"] = 99;
    EXPECT_THROW(model_from_json(v), ConfigError);
    auto a = to_json(m);
    a["activation"] = "softmax";
    EXPECT_THROW(model_from_json(a), ConfigError);
    auto k = to_json(m);
    k.erase("weights");
    EXPECT_THROW(model_from_json(k), ConfigError);
}
