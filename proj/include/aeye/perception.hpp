#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aeye/dataset.hpp"
#include "aeye/semantic.hpp"

namespace aeye {

// ---------------------------------------------------------------------------
// Degradation channel: the semantic driver's imperfect view.
// ---------------------------------------------------------------------------

/// Corruption rates are scaled by (1 - quality); quality 1 is the identity.
struct DegradationParams {
  double quality = 0.5;
  int min_blob_cells = 5;
  double blob_dropout_rate = 0.7;
  double distance_noise_base = 0.01;
  double boundary_flip_rate = 0.1;
  std::uint64_t seed = 0;
};

void validate(const DegradationParams& params);

/// Three-stage corruption, deterministic in (truth, params.seed):
///  1. object blobs smaller than min_blob_cells are painted over with their
///     surroundings with probability blob_dropout_rate * (1 - q);
///  2. each cell flips to another class with probability
///     distance_noise_base * (1 - q) * row / rows;
///  3. cells on a class boundary take a differing neighbor's class with
///     probability boundary_flip_rate * (1 - q).
SemanticGrid degrade(const SemanticGrid& truth, const DegradationParams& params);

// ---------------------------------------------------------------------------
// Trainable per-cell softmax classifier.
// ---------------------------------------------------------------------------

/// 3 channels per window cell plus normalized (row, col).
constexpr std::size_t feature_dim(int window_radius) noexcept {
  const auto side = static_cast<std::size_t>(2 * window_radius + 1);
  return 3 * side * side + 2;
}

/// Appearance window around (row, col), zero-padded outside the grid, then
/// row/rows and col/cols. Throws InputError if (row, col) is out of bounds.
std::vector<double> cell_features(const AppearanceGrid& app, int row, int col, int window_radius);
void cell_features_into(const AppearanceGrid& app, int row, int col, int window_radius, std::span<double> out);

class PerceiverModel {
 public:
  explicit PerceiverModel(int window_radius = 1);

  /// Weights uniform in [-0.01, 0.01], bias zero.
  static PerceiverModel seeded(int window_radius, std::uint64_t seed);

  int window_radius() const noexcept { return window_radius_; }
  std::size_t feature_dim() const noexcept { return dim_; }
  static constexpr std::size_t num_classes() noexcept { return kNumClasses; }

  /// Row-major [num_classes x feature_dim].
  std::span<double> weights() noexcept { return weights_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<double> bias() noexcept { return bias_; }
  std::span<const double> bias() const noexcept { return bias_; }

  double& weight(std::size_t cls, std::size_t j) noexcept { return weights_[cls * dim_ + j]; }
  double weight(std::size_t cls, std::size_t j) const noexcept { return weights_[cls * dim_ + j]; }

  std::array<double, kNumClasses> logits(std::span<const double> features) const noexcept;
  std::array<double, kNumClasses> probabilities(std::span<const double> features) const noexcept;

  bool all_finite() const noexcept;

  friend bool operator==(const PerceiverModel&, const PerceiverModel&) = default;

 private:
  int window_radius_;
  std::size_t dim_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& logits) noexcept;

struct LabeledFeatures {
  std::vector<double> features;
  ClassId label = ClassId::void_;
};

struct LossAndGrad {
  double loss = 0.0;
  PerceiverModel gradient;  // same shape as the model
};

/// Mean cross entropy over the batch and its exact gradient.
LossAndGrad loss_and_grad(const PerceiverModel& model, std::span<const LabeledFeatures> batch);

struct TrainConfig {
  int epochs = 10;
  double lr0 = 0.01;
  double poly_power = 0.9;
  double moment1 = 0.9;
  double moment2 = 0.999;
  double epsilon = 1e-8;
  int batch_cells = 256;
  int window_radius = 1;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

/// Polynomial decay lr0 * (1 - step/total)^power.
double poly_lr(const TrainConfig& cfg, std::size_t step, std::size_t total_steps) noexcept;

/// Adam over seeded shuffles of every labelled cell in the dataset.
PerceiverModel train(const Dataset& dataset, const TrainConfig& cfg);

/// Per-cell argmax; exact ties resolve to the lowest class id.
SemanticGrid predict(const PerceiverModel& model, const AppearanceGrid& app);

/// "AEYE-PM1", u32 num_classes, u32 window_radius, u32 feature_dim, then
/// weights and bias as little-endian f64.
std::string serialize_model(const PerceiverModel& model);
PerceiverModel deserialize_model(std::string_view bytes, const std::string& source = "<memory>");
void save_model(const PerceiverModel& model, const std::filesystem::path& path);
PerceiverModel load_model(const std::filesystem::path& path);

}  // namespace aeye
