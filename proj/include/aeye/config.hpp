#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aeye/agents.hpp"
#include "aeye/capture.hpp"
#include "aeye/curation.hpp"
#include "aeye/perception.hpp"
#include "aeye/world.hpp"
#include "json.hpp"

namespace aeye {

/// At least one limit must be set; the campaign stops at whichever is hit first.
struct StopCondition {
  std::optional<double> max_km;
  std::optional<double> max_minutes;  // simulated minutes
  std::optional<std::size_t> max_cc;
};

void validate(const StopCondition& stop);

enum class PerceptionKind { degrade, model };

struct PerceptionSource {
  PerceptionKind kind = PerceptionKind::degrade;
  DegradationParams degradation;
  std::string model_path;  // when kind == model
};

struct LiveSettings {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;
  std::string static_dir;     // served over plain HTTP when non-empty
  double input_hold_s = 0.5;  // stale inputs are held this long, then zeroed
};

/// Desk-scale analog of the three-way training comparison.
struct ExperimentConfig {
  std::uint64_t corpus_seed = 7;
  int base_scenes = 30;
  int frames_per_scene = 12;
  int natural_test_scenes = 8;
  int cc_train_records = 4;
  int cc_test_records = 8;
  double cc_quality = 0.3;
  double cc_max_km = 60.0;  // campaign budget when harvesting records
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double enrich_tol = 0.05;
  double walker_factor = 3.0;
};

/// The one config document shared by every subcommand.
struct RigConfig {
  WorldConfig world;
  PerceptionSource perception;
  SemanticPolicyParams semantic;
  SafetyPolicyParams safety;
  double deadband = kDefaultDeadband;
  double rearm_seconds = 1.0;
  CaptureSettings capture;
  StopCondition stop;
  LiveSettings live;
  SceneSampler sampler;
  TrainConfig train;
  ExperimentConfig experiment;
};

/// Throws ConfigError naming the offending field, including unknown keys.
RigConfig parse_config(const nlohmann::json& doc);
RigConfig load_config(const std::filesystem::path& path);
/// Parses and validates the defaults, so an empty document is a valid config.
RigConfig default_config();
void validate(const RigConfig& cfg);
nlohmann::json to_json(const RigConfig& cfg);

/// Applies a --seed override to every seeded component.
void apply_seed(RigConfig& cfg, std::uint64_t seed);

}  // namespace aeye
