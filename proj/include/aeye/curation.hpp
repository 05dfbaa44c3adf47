#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aeye/agents.hpp"
#include "aeye/capture.hpp"
#include "aeye/dataset.hpp"
#include "aeye/world.hpp"

namespace aeye {

/// Draws per-scene world configs within the configured NPC and weather ranges.
struct SceneSampler {
  WorldConfig base;
  int vehicles_min = 2;
  int vehicles_max = 6;
  int walkers_min = 6;
  int walkers_max = 18;
  double clouds_min = 0.0;
  double clouds_max = 30.0;
  double wind_min = 0.0;
  double wind_max = 50.0;
  double altitude_min = 20.0;
  double altitude_max = 90.0;
  int ticks_per_frame = 10;  // 1 frame per simulated second at 10 Hz
  SemanticPolicyParams driving;

  WorldConfig sample(std::uint64_t scene_seed) const;
};

void validate(const SceneSampler& sampler);

/// Same sampler with the walker range scaled up, for pedestrian-heavy frames.
SceneSampler pedestrian_heavy(const SceneSampler& sampler, double factor = 3.0);

/// Rolls one seeded world forward under the semantic policy on ground truth
/// and samples `frames` frames at the sampler's frame interval.
std::vector<FrameSample> roll_scene(const SceneSampler& sampler, std::uint64_t scene_seed, int frames,
                                    const std::string& scene_id);

Dataset generate_base(const SceneSampler& sampler, int n_scenes, int frames_per_scene, std::uint64_t seed,
                      std::string name = "natural");

struct ValidationSplit {
  Dataset train;
  Dataset validation;
};

/// Moves the last `fraction` of scenes (at least one) into a validation set.
ValidationSplit hold_out_validation(Dataset dataset, double fraction = 0.2);

struct ClassPixelStats {
  std::size_t n_scenes = 0;
  std::size_t n_frames = 0;
  std::array<std::uint64_t, kNumClasses> total_cells{};
  std::array<double, kNumClasses> mean_per_scene{};

  double mean(ClassId c) const noexcept { return mean_per_scene[index(c)]; }
  std::uint64_t total(ClassId c) const noexcept { return total_cells[index(c)]; }
};

ClassPixelStats class_stats(const Dataset& ds);

/// Replaces as many base frames as there are corner-case frames, removing
/// base frames uniformly at random without emptying a scene unless that is
/// unavoidable. Each record becomes a scene named by its record id.
Dataset swap_in_corner_cases(const Dataset& base, std::span<const CornerCaseRecord> ccs, std::uint64_t seed);

struct EnrichmentResult {
  Dataset dataset;
  std::size_t replacements = 0;
  std::size_t attempts = 0;
  double achieved_mean = 0.0;
};

/// Swaps uniformly chosen base frames for pedestrian-heavy frames (the
/// sampler with its walker range scaled by walker_factor) until the
/// pedestrian mean per scene is within `tol` (relative) of `target_mean`.
/// A candidate is only kept if it moves the mean closer to the target.
/// Throws EnrichmentError after budget_factor * |base| attempts.
EnrichmentResult build_pedestrian_enriched(const Dataset& base, double target_mean, double tol,
                                           const SceneSampler& sampler, std::uint64_t seed,
                                           double budget_factor = 5.0, double walker_factor = 3.0);

/// One scene per record, frames labelled with ground truth.
Dataset dataset_from_records(std::span<const CornerCaseRecord> records, std::string name);

void save_dataset(const Dataset& ds, const std::filesystem::path& root);
Dataset load_dataset(const std::filesystem::path& root);

}  // namespace aeye
