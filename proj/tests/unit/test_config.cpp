#include <gtest/gtest.h>

#include <fstream>

#include "aeye/config.hpp"
#include "aeye/error.hpp"
#include "helpers.hpp"

using namespace aeye;
using nlohmann::json;

namespace {

std::string failing_field(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  const RigConfig cfg = default_config();
  EXPECT_EQ(cfg.world.seed, 1u);
  EXPECT_EQ(cfg.capture.capacity(), 30u);
  EXPECT_EQ(cfg.safety.ttc_threshold_s, 1.5);
  EXPECT_EQ(cfg.safety.reaction_delay_ticks, 2);
  EXPECT_EQ(cfg.deadband, 0.05);
  EXPECT_EQ(cfg.world.speed_limit_kmh, 50.0);
  ASSERT_TRUE(cfg.stop.max_km.has_value());
  EXPECT_EQ(*cfg.stop.max_km, 10.0);
  EXPECT_EQ(cfg.semantic.geometry, cfg.world.view);
  EXPECT_EQ(cfg.sampler.base.seed, cfg.world.seed);
}

TEST(Config, OverridesApply) {
  const RigConfig cfg = parse_config(json::parse(R"({
    "world": {"seed": 9, "npc_walkers": 10, "fov_deg": 60},
    "perception": {"quality": 0.8},
    "stop": {"max_cc": 3},
    "experiment": {"seeds": [4, 5]}
  })"));
  EXPECT_EQ(cfg.world.seed, 9u);
  EXPECT_EQ(cfg.world.npc_walkers, 10);
  EXPECT_NEAR(cfg.world.view.fov_rad, std::numbers::pi / 3, 1e-12);
  EXPECT_EQ(cfg.perception.degradation.quality, 0.8);
  EXPECT_EQ(cfg.stop.max_cc, std::optional<std::size_t>(3));
  EXPECT_EQ(cfg.experiment.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_NEAR(cfg.semantic.geometry.fov_rad, std::numbers::pi / 3, 1e-12);
}

TEST(Config, UnknownFieldsAreNamed) {
  EXPECT_EQ(failing_field(json::parse(R"({"world": {"sede": 3}})")), "world.sede");
  EXPECT_EQ(failing_field(json::parse(R"({"wrld": {}})")), "wrld");
  EXPECT_EQ(failing_field(json::parse(R"({"perception": {"qualty": 0.5}})")), "perception.qualty");
}

TEST(Config, TypeErrorsAreNamed) {
  EXPECT_EQ(failing_field(json::parse(R"({"world": {"seed": "one"}})")), "world.seed");
  EXPECT_EQ(failing_field(json::parse(R"({"world": {"npc_walkers": 2.5}})")), "world.npc_walkers");
  EXPECT_EQ(failing_field(json::parse(R"({"semantic_policy": {"light_stop": 1}})")), "semantic_policy.light_stop");
  EXPECT_EQ(failing_field(json::parse(R"({"world": []})")), "world");
}

TEST(Config, RangeErrorsAreNamed) {
  EXPECT_EQ(failing_field(json::parse(R"({"world": {"clouds": 40}})")), "world.clouds");
  EXPECT_EQ(failing_field(json::parse(R"({"perception": {"quality": 1.5}})")), "perception.quality");
  EXPECT_EQ(failing_field(json::parse(R"({"semantic_policy": {"cruise_speed": 80}})")),
            "semantic_policy.cruise_speed");
  EXPECT_EQ(failing_field(json::parse(R"({"safety_policy": {"ttc_threshold": 0}})")), "safety_policy.ttc_threshold");
  EXPECT_EQ(failing_field(json::parse(R"({"arbitration": {"deadband": 0.5}})")), "arbitration.deadband");
  EXPECT_EQ(failing_field(json::parse(R"({"capture": {"fps": 30}})")), "capture.fps");
  EXPECT_EQ(failing_field(json::parse(R"({"perception": {"source": "oracle"}})")), "perception.source");
  EXPECT_EQ(failing_field(json::parse(R"({"perception": {"source": "model"}})")), "perception.model_path");
  EXPECT_EQ(failing_field(json::parse(R"({"train": {"lr0": -1}})")), "train.lr0");
}

TEST(Config, SerializedConfigParsesBackIdentically) {
  RigConfig cfg = default_config();
  apply_seed(cfg, 42);
  const json once = to_json(cfg);
  EXPECT_EQ(to_json(parse_config(once)), once);
}

TEST(Config, ApplySeedReachesEverySeededPart) {
  RigConfig cfg = default_config();
  apply_seed(cfg, 42);
  EXPECT_EQ(cfg.world.seed, 42u);
  EXPECT_EQ(cfg.sampler.base.seed, 42u);
  EXPECT_NE(cfg.perception.degradation.seed, 0u);
  EXPECT_NE(cfg.train.seed, cfg.perception.degradation.seed);
}

TEST(Config, LoadReportsMissingAndMalformedFiles) {
  aeye::test::TempDir tmp;
  EXPECT_THROW(load_config(tmp / "absent.json"), ConfigError);
  std::ofstream(tmp / "bad.json") << "{ \"world\": ";
  EXPECT_THROW(load_config(tmp / "bad.json"), ConfigError);
  std::ofstream(tmp / "ok.json") << R"({"stop": {"max_km": 2}})";
  EXPECT_EQ(*load_config(tmp / "ok.json").stop.max_km, 2.0);
}
