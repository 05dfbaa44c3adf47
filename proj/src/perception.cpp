#include "aeye/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "aeye/error.hpp"
#include "aeye/rng.hpp"
#include "byte_io.hpp"

namespace aeye {

namespace {

constexpr std::array<std::pair<int, int>, 4> kNeighbors = {{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
constexpr std::string_view kModelMagic = "AEYE-PM1";

void require_probability(double p, const char* field) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(field, "must lie in [0, 1]");
}

// Relabels small object blobs (stage 1 of degrade).
void drop_small_blobs(const SemanticGrid& truth, SemanticGrid& out, const DegradationParams& params, double scale,
                      Rng& rng) {
  const int rows = truth.rows();
  const int cols = truth.cols();
  const double p = params.blob_dropout_rate * scale;
  std::vector<char> seen(truth.size(), 0);
  std::vector<std::pair<int, int>> blob;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto o = static_cast<std::size_t>(r * cols + c);
      if (seen[o] || !is_object(truth.at(r, c))) continue;
      const ClassId cls = truth.at(r, c);
      blob.clear();
      stack.assign(1, {r, c});
      seen[o] = 1;
      while (!stack.empty()) {
        const auto [br, bc] = stack.back();
        stack.pop_back();
        blob.emplace_back(br, bc);
        for (const auto& [dr, dc] : kNeighbors) {
          const int nr = br + dr;
          const int nc = bc + dc;
          if (!truth.contains(nr, nc)) continue;
          const auto no = static_cast<std::size_t>(nr * cols + nc);
          if (seen[no] || truth.at(nr, nc) != cls) continue;
          seen[no] = 1;
          stack.emplace_back(nr, nc);
        }
      }
      if (static_cast<int>(blob.size()) >= params.min_blob_cells) continue;
      if (!(rng.uniform() < p)) continue;

      std::array<std::size_t, kNumClasses> border{};
      for (const auto& [br, bc] : blob) {
        for (const auto& [dr, dc] : kNeighbors) {
          const int nr = br + dr;
          const int nc = bc + dc;
          if (truth.contains(nr, nc) && truth.at(nr, nc) != cls) ++border[index(truth.at(nr, nc))];
        }
      }
      const auto best = std::max_element(border.begin(), border.end());  // first max = lowest id
      if (*best == 0) continue;
      const auto fill = static_cast<ClassId>(best - border.begin());
      for (const auto& [br, bc] : blob) out.set(br, bc, fill);
    }
  }
}

}  // namespace

void validate(const DegradationParams& params) {
  require_probability(params.quality, "quality");
  require_probability(params.blob_dropout_rate, "blob_dropout_rate");
  require_probability(params.distance_noise_base, "distance_noise_base");
  require_probability(params.boundary_flip_rate, "boundary_flip_rate");
  if (params.min_blob_cells < 0) throw ConfigError("min_blob_cells", "must be non-negative");
}

SemanticGrid degrade(const SemanticGrid& truth, const DegradationParams& params) {
  validate(params);
  const double scale = 1.0 - params.quality;
  if (scale <= 0.0) return truth;

  Rng rng(params.seed);
  SemanticGrid out = truth;
  drop_small_blobs(truth, out, params, scale, rng);

  const int rows = truth.rows();
  const int cols = truth.cols();
  const double noise = params.distance_noise_base * scale;
  for (int r = 0; r < rows; ++r) {
    const double p = noise * static_cast<double>(r) / rows;
    for (int c = 0; c < cols; ++c) {
      if (!(rng.uniform() < p)) continue;
      const auto current = static_cast<std::uint64_t>(out.at(r, c));
      const std::uint64_t k = rng.below(kNumClasses - 1);
      out.set(r, c, static_cast<ClassId>(k < current ? k : k + 1));
    }
  }

  const double flip = params.boundary_flip_rate * scale;
  if (flip > 0.0) {
    const SemanticGrid ref = out;
    std::array<ClassId, 4> differing{};
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        std::size_t n = 0;
        for (const auto& [dr, dc] : kNeighbors) {
          if (ref.contains(r + dr, c + dc) && ref.at(r + dr, c + dc) != ref.at(r, c)) {
            differing[n++] = ref.at(r + dr, c + dc);
          }
        }
        if (n == 0 || !(rng.uniform() < flip)) continue;
        out.set(r, c, differing[rng.below(n)]);
      }
    }
  }
  return out;
}

void cell_features_into(const AppearanceGrid& app, int row, int col, int window_radius, std::span<double> out) {
  if (!app.contains(row, col)) {
    throw InputError("cell_features: (" + std::to_string(row) + ", " + std::to_string(col) + ") out of bounds");
  }
  if (window_radius < 0) throw InputError("cell_features: negative window radius");
  if (out.size() != feature_dim(window_radius)) throw InputError("cell_features: output has wrong length");
  std::size_t k = 0;
  for (int dr = -window_radius; dr <= window_radius; ++dr) {
    for (int dc = -window_radius; dc <= window_radius; ++dc) {
      if (app.contains(row + dr, col + dc)) {
        const Rgb v = app.at(row + dr, col + dc);
        out[k] = v.r;
        out[k + 1] = v.g;
        out[k + 2] = v.b;
      } else {
        out[k] = out[k + 1] = out[k + 2] = 0.0;
      }
      k += 3;
    }
  }
  out[k] = static_cast<double>(row) / app.rows();
  out[k + 1] = static_cast<double>(col) / app.cols();
}

std::vector<double> cell_features(const AppearanceGrid& app, int row, int col, int window_radius) {
  if (window_radius < 0) throw InputError("cell_features: negative window radius");
  std::vector<double> out(feature_dim(window_radius));
  cell_features_into(app, row, col, window_radius, out);
  return out;
}

PerceiverModel::PerceiverModel(int window_radius)
    : window_radius_(window_radius), dim_(aeye::feature_dim(window_radius)) {
  if (window_radius < 0) throw InputError("window radius must be non-negative");
  weights_.assign(kNumClasses * dim_, 0.0);
  bias_.assign(kNumClasses, 0.0);
}

PerceiverModel PerceiverModel::seeded(int window_radius, std::uint64_t seed) {
  PerceiverModel m(window_radius);
  Rng rng(seed);
  for (double& w : m.weights_) w = rng.uniform(-0.01, 0.01);
  return m;
}

std::array<double, kNumClasses> PerceiverModel::logits(std::span<const double> features) const noexcept {
  std::array<double, kNumClasses> z{};
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const double* w = weights_.data() + k * dim_;
    double acc = bias_[k];
    for (std::size_t j = 0; j < dim_; ++j) acc += w[j] * features[j];
    z[k] = acc;
  }
  return z;
}

std::array<double, kNumClasses> PerceiverModel::probabilities(std::span<const double> features) const noexcept {
  return softmax(logits(features));
}

bool PerceiverModel::all_finite() const noexcept {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(weights_.begin(), weights_.end(), finite) && std::all_of(bias_.begin(), bias_.end(), finite);
}

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& z) noexcept {
  const double zmax = *std::max_element(z.begin(), z.end());
  std::array<double, kNumClasses> p{};
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    p[k] = std::exp(z[k] - zmax);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

LossAndGrad loss_and_grad(const PerceiverModel& model, std::span<const LabeledFeatures> batch) {
  if (batch.empty()) throw InputError("loss_and_grad: empty batch");
  const std::size_t dim = model.feature_dim();
  LossAndGrad out{0.0, PerceiverModel(model.window_radius())};
  for (const LabeledFeatures& item : batch) {
    if (item.features.size() != dim) throw InputError("loss_and_grad: feature vector has wrong length");
    if (!std::all_of(item.features.begin(), item.features.end(), [](double v) { return std::isfinite(v); })) {
      throw InputError("loss_and_grad: non-finite feature");
    }
    const auto z = model.logits(item.features);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double lse = zmax + std::log(sum);
    const std::size_t y = index(item.label);
    out.loss += lse - z[y];
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const double delta = std::exp(z[k] - lse) - (k == y ? 1.0 : 0.0);
      out.gradient.bias()[k] += delta;
      for (std::size_t j = 0; j < dim; ++j) out.gradient.weight(k, j) += delta * item.features[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (double& g : out.gradient.weights()) g *= inv;
  for (double& g : out.gradient.bias()) g *= inv;
  return out;
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 0) throw ConfigError("epochs", "must be non-negative");
  if (!(cfg.lr0 > 0.0) || !std::isfinite(cfg.lr0)) throw ConfigError("lr0", "must be positive");
  if (!(cfg.poly_power >= 0.0)) throw ConfigError("poly_power", "must be non-negative");
  if (!(cfg.moment1 >= 0.0 && cfg.moment1 < 1.0)) throw ConfigError("moment1", "must lie in [0, 1)");
  if (!(cfg.moment2 >= 0.0 && cfg.moment2 < 1.0)) throw ConfigError("moment2", "must lie in [0, 1)");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
  if (cfg.batch_cells < 1) throw ConfigError("batch_cells", "must be at least 1");
  if (cfg.window_radius < 0 || cfg.window_radius > 4) throw ConfigError("window_radius", "must lie in [0, 4]");
}

double poly_lr(const TrainConfig& cfg, std::size_t step, std::size_t total_steps) noexcept {
  if (total_steps == 0) return cfg.lr0;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return cfg.lr0 * std::pow(1.0 - frac, cfg.poly_power);
}

PerceiverModel train(const Dataset& dataset, const TrainConfig& cfg) {
  validate(cfg);
  std::vector<const FrameSample*> frames;
  for (const Scene& scene : dataset.scenes) {
    for (const FrameSample& f : scene.frames) frames.push_back(&f);
  }
  if (frames.empty()) throw InputError("train: empty dataset");

  PerceiverModel model = PerceiverModel::seeded(cfg.window_radius, derive_seed(cfg.seed, 0));
  if (cfg.epochs == 0) return model;

  struct CellRef {
    std::uint32_t frame;
    std::uint32_t cell;
  };
  std::vector<CellRef> cells;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::size_t n = frames[f]->label.size();
    for (std::size_t i = 0; i < n; ++i) cells.push_back({static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(i)});
  }

  const std::size_t dim = model.feature_dim();
  const std::size_t n_params = kNumClasses * dim + kNumClasses;
  std::vector<double> grad(n_params);
  std::vector<double> m1(n_params, 0.0);
  std::vector<double> m2(n_params, 0.0);
  std::vector<double> x(dim);
  const auto batch = static_cast<std::size_t>(cfg.batch_cells);
  const std::size_t steps_per_epoch = (cells.size() + batch - 1) / batch;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(cfg.epochs);
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;
  std::size_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    rng.shuffle(cells.begin(), cells.end());
    for (std::size_t start = 0; start < cells.size(); start += batch, ++step) {
      const std::size_t end = std::min(cells.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const FrameSample& f = *frames[cells[i].frame];
        const int cols = f.label.cols();
        const int r = static_cast<int>(cells[i].cell) / cols;
        const int c = static_cast<int>(cells[i].cell) % cols;
        cell_features_into(f.appearance, r, c, cfg.window_radius, x);
        const auto p = model.probabilities(x);
        const std::size_t y = index(f.label.at(r, c));
        for (std::size_t k = 0; k < kNumClasses; ++k) {
          const double delta = p[k] - (k == y ? 1.0 : 0.0);
          double* g = grad.data() + k * dim;
          for (std::size_t j = 0; j < dim; ++j) g[j] += delta * x[j];
          grad[kNumClasses * dim + k] += delta;
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      beta1_pow *= cfg.moment1;
      beta2_pow *= cfg.moment2;
      const double lr = poly_lr(cfg, step, total_steps);
      const double c1 = 1.0 / (1.0 - beta1_pow);
      const double c2 = 1.0 / (1.0 - beta2_pow);
      for (std::size_t i = 0; i < n_params; ++i) {
        const double g = grad[i] * inv;
        m1[i] = cfg.moment1 * m1[i] + (1.0 - cfg.moment1) * g;
        m2[i] = cfg.moment2 * m2[i] + (1.0 - cfg.moment2) * g * g;
        double& w = i < kNumClasses * dim ? model.weights()[i] : model.bias()[i - kNumClasses * dim];
        w -= lr * (m1[i] * c1) / (std::sqrt(m2[i] * c2) + cfg.epsilon);
      }
    }
  }
  return model;
}

SemanticGrid predict(const PerceiverModel& model, const AppearanceGrid& app) {
  SemanticGrid out(app.rows(), app.cols());
  std::vector<double> x(model.feature_dim());
  for (int r = 0; r < app.rows(); ++r) {
    for (int c = 0; c < app.cols(); ++c) {
      cell_features_into(app, r, c, model.window_radius(), x);
      const auto z = model.logits(x);
      const auto best = std::max_element(z.begin(), z.end());
      out.set(r, c, static_cast<ClassId>(best - z.begin()));
    }
  }
  return out;
}

std::string serialize_model(const PerceiverModel& model) {
  std::string out(kModelMagic);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(kNumClasses));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.window_radius()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.feature_dim()));
  for (double w : model.weights()) detail::put_le<double>(out, w);
  for (double b : model.bias()) detail::put_le<double>(out, b);
  return out;
}

PerceiverModel deserialize_model(std::string_view bytes, const std::string& source) {
  const std::size_t header = kModelMagic.size() + 12;
  if (bytes.size() < header || bytes.substr(0, kModelMagic.size()) != kModelMagic) {
    throw FormatError(source, "not an AEYE-PM1 model");
  }
  const auto classes = detail::get_le<std::uint32_t>(bytes, kModelMagic.size());
  const auto radius = detail::get_le<std::uint32_t>(bytes, kModelMagic.size() + 4);
  const auto dim = detail::get_le<std::uint32_t>(bytes, kModelMagic.size() + 8);
  if (classes != kNumClasses || radius > 4 || dim != feature_dim(static_cast<int>(radius))) {
    throw FormatError(source, "inconsistent model dimensions");
  }
  PerceiverModel model(static_cast<int>(radius));
  const std::size_t expected = header + 8 * (classes * dim + classes);
  if (bytes.size() != expected) throw FormatError(source, "model payload has wrong length");
  std::size_t off = header;
  for (double& w : model.weights()) {
    w = detail::get_le<double>(bytes, off);
    off += 8;
  }
  for (double& b : model.bias()) {
    b = detail::get_le<double>(bytes, off);
    off += 8;
  }
  if (!model.all_finite()) throw FormatError(source, "model contains non-finite values");
  return model;
}

void save_model(const PerceiverModel& model, const std::filesystem::path& path) {
  detail::write_file(path, serialize_model(model));
}

PerceiverModel load_model(const std::filesystem::path& path) {
  return deserialize_model(detail::read_file(path), path.string());
}

}  // namespace aeye
