#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aeye/arbitration.hpp"
#include "aeye/dataset.hpp"
#include "aeye/perception.hpp"
#include "aeye/semantic.hpp"
#include "json.hpp"

namespace aeye {

class ConfusionAccumulator {
 public:
  /// Throws InputError if the grids differ in shape.
  void add(const SemanticGrid& predicted, const SemanticGrid& truth);
  ConfusionAccumulator& operator+=(const ConfusionAccumulator& other) noexcept;

  std::uint64_t tp(ClassId c) const noexcept { return tp_[index(c)]; }
  std::uint64_t fp(ClassId c) const noexcept { return fp_[index(c)]; }
  std::uint64_t fn(ClassId c) const noexcept { return fn_[index(c)]; }
  bool present(ClassId c) const noexcept { return tp(c) + fp(c) + fn(c) > 0; }

  bool operator==(const ConfusionAccumulator&) const = default;

 private:
  std::array<std::uint64_t, kNumClasses> tp_{};
  std::array<std::uint64_t, kNumClasses> fp_{};
  std::array<std::uint64_t, kNumClasses> fn_{};
};

ConfusionAccumulator accumulate(ConfusionAccumulator conf, const SemanticGrid& predicted, const SemanticGrid& truth);

/// nullopt for a class with tp + fp + fn == 0.
std::optional<double> iou(const ConfusionAccumulator& conf, ClassId c) noexcept;
/// Mean over the given classes that are present; nullopt if none are.
std::optional<double> miou(const ConfusionAccumulator& conf, std::span<const ClassId> classes) noexcept;
/// Mean over every present class.
std::optional<double> miou(const ConfusionAccumulator& conf) noexcept;

ConfusionAccumulator evaluate_model(const PerceiverModel& model, const Dataset& test);

struct CampaignEvent {
  double odometer_km = 0.0;
  double time_min = 0.0;
  InterventionCause cause = InterventionCause::overlooked_walker;
  std::string record_id;

  bool operator==(const CampaignEvent&) const = default;
};

struct CampaignLog {
  std::vector<CampaignEvent> events;
  double distance_km = 0.0;
  double time_min = 0.0;
  std::uint64_t ticks = 0;
  std::uint64_t underfull_interventions = 0;  // fired before the buffer held 3 s
  std::uint64_t collisions = 0;

  bool operator==(const CampaignLog&) const = default;
};

/// Throws InputError unless events are non-decreasing and within the totals.
void validate(const CampaignLog& log);

struct CampaignStats {
  double distance_km = 0.0;
  double time_min = 0.0;
  std::size_t n_cc = 0;
  std::optional<double> mean_d_cc;
  std::optional<double> std_d_cc;
  std::optional<double> mean_t_cc;
  std::optional<double> std_t_cc;
  std::string absent_reason;  // set when the interval stats are absent
  double tail_km = 0.0;       // distance after the last event
  double tail_min = 0.0;
};

/// Intervals run from campaign start to the first event and then between
/// successive events; sample statistics (n - 1), absent when n_cc < 2.
CampaignStats campaign_stats(const CampaignLog& log);

nlohmann::json to_json(const CampaignLog& log);
CampaignLog campaign_log_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CampaignStats& stats);

inline constexpr std::array<const char*, 3> kCompareModels = {"natural", "pedestrian_enriched", "cc_enriched"};
inline constexpr std::array<const char*, 2> kCompareTests = {"safety_critical", "natural"};

struct ScoreCell {
  std::optional<double> pedestrian_iou;
  std::optional<double> miou;
};

/// scores[model][test], models and tests ordered as kCompareModels / kCompareTests.
struct SeedScores {
  std::uint64_t seed = 0;
  std::array<std::array<ScoreCell, 2>, 3> scores{};
  std::array<double, 3> pedestrian_mean_per_scene{};
};

struct CompareReport {
  std::vector<SeedScores> seeds;

  /// Mean over the seeds where the value is defined.
  ScoreCell mean(std::size_t model, std::size_t test) const;
  double pedestrian_mean_per_scene(std::size_t model) const;
};

/// Scores the three models on both test sets. Throws InputError on an empty test set.
SeedScores compare_models(const std::array<const PerceiverModel*, 3>& models, const Dataset& safety_critical,
                          const Dataset& natural, std::uint64_t seed);

std::string to_text(const CompareReport& report);
nlohmann::json to_json(const CompareReport& report);

}  // namespace aeye
