#include "aeye/curation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "aeye/error.hpp"
#include "aeye/rng.hpp"
#include "byte_io.hpp"
#include "json.hpp"

namespace aeye {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDatasetFormat = "aeye-dataset/1";

std::size_t pedestrian_cells(const FrameSample& f) { return f.label.count(ClassId::pedestrian); }

std::uint64_t pedestrian_total(const Dataset& ds) {
  std::uint64_t total = 0;
  for (const Scene& s : ds.scenes) {
    for (const FrameSample& f : s.frames) total += pedestrian_cells(f);
  }
  return total;
}

std::string scene_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04zu", prefix, i);
  return buf;
}

std::string frame_stem(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return buf;
}

bool safe_component(const std::string& s) {
  return !s.empty() && s != "." && s != ".." && s.find('/') == std::string::npos &&
         s.find('\\') == std::string::npos;
}

}  // namespace

std::string_view origin_name(FrameOrigin o) noexcept { return o == FrameOrigin::base ? "base" : "corner_case"; }

std::size_t Dataset::frame_count() const noexcept {
  std::size_t n = 0;
  for (const Scene& s : scenes) n += s.frames.size();
  return n;
}

std::size_t Dataset::frame_count(FrameOrigin origin) const noexcept {
  std::size_t n = 0;
  for (const Scene& s : scenes) {
    n += static_cast<std::size_t>(
        std::count_if(s.frames.begin(), s.frames.end(), [&](const FrameSample& f) { return f.origin == origin; }));
  }
  return n;
}

void validate(const SceneSampler& s) {
  if (s.vehicles_min < 0 || s.vehicles_max < s.vehicles_min) throw ConfigError("vehicles", "need 0 <= min <= max");
  if (s.walkers_min < 0 || s.walkers_max < s.walkers_min) throw ConfigError("walkers", "need 0 <= min <= max");
  if (s.clouds_min < 0.0 || s.clouds_max > 30.0 || s.clouds_max < s.clouds_min) {
    throw ConfigError("clouds", "range must lie in [0, 30]");
  }
  if (s.wind_min < 0.0 || s.wind_max > 50.0 || s.wind_max < s.wind_min) {
    throw ConfigError("wind", "range must lie in [0, 50]");
  }
  if (s.altitude_min < 20.0 || s.altitude_max > 90.0 || s.altitude_max < s.altitude_min) {
    throw ConfigError("sun_altitude", "range must lie in [20, 90]");
  }
  if (s.ticks_per_frame < 1) throw ConfigError("ticks_per_frame", "must be at least 1");
  validate(s.driving);
}

WorldConfig SceneSampler::sample(std::uint64_t scene_seed) const {
  Rng rng(derive_seed(scene_seed, 0x53414d50ULL));
  WorldConfig c = base;
  c.seed = scene_seed;
  c.npc_vehicles = static_cast<int>(rng.range(vehicles_min, vehicles_max));
  c.npc_walkers = static_cast<int>(rng.range(walkers_min, walkers_max));
  c.npc_min = vehicles_min + walkers_min;
  c.npc_max = vehicles_max + walkers_max;
  c.clouds = rng.uniform(clouds_min, clouds_max);
  c.wind = rng.uniform(wind_min, wind_max);
  c.sun_altitude = rng.uniform(altitude_min, altitude_max);
  return c;
}

SceneSampler pedestrian_heavy(const SceneSampler& sampler, double factor) {
  SceneSampler s = sampler;
  s.walkers_min = static_cast<int>(std::lround(sampler.walkers_min * factor));
  s.walkers_max = static_cast<int>(std::lround(sampler.walkers_max * factor));
  return s;
}

std::vector<FrameSample> roll_scene(const SceneSampler& sampler, std::uint64_t scene_seed, int frames,
                                    const std::string& scene_id) {
  const World world(sampler.sample(scene_seed));
  SemanticPolicyParams driving = sampler.driving;
  driving.geometry = world.geometry();
  WorldState state = world.init();
  std::vector<FrameSample> out;
  out.reserve(static_cast<std::size_t>(std::max(frames, 0)));
  while (static_cast<int>(out.size()) < frames) {
    Rendering view = world.render(state);
    if (state.tick > 0 && state.tick % static_cast<std::uint64_t>(sampler.ticks_per_frame) == 0) {
      out.push_back({view.appearance, view.semantic, FrameOrigin::base, scene_id});
      if (static_cast<int>(out.size()) == frames) break;
    }
    const auto light = world.light_ahead(state);
    const ControlCommand cmd =
        semantic_policy(view.semantic, mps_to_kmh(state.ego.speed), driving,
                        light ? std::optional<LightPhase>(light->phase) : std::nullopt);
    state = world.step(state, cmd);
  }
  return out;
}

Dataset generate_base(const SceneSampler& sampler, int n_scenes, int frames_per_scene, std::uint64_t seed,
                      std::string name) {
  if (n_scenes < 1 || frames_per_scene < 1) throw InputError("generate_base: need at least one scene and frame");
  validate(sampler);
  Dataset ds;
  ds.meta = {std::move(name), seed};
  for (int i = 0; i < n_scenes; ++i) {
    Scene scene;
    scene.scene_id = scene_name("scene", static_cast<std::size_t>(i));
    scene.frames = roll_scene(sampler, derive_seed(seed, static_cast<std::uint64_t>(i)), frames_per_scene,
                              scene.scene_id);
    ds.scenes.push_back(std::move(scene));
  }
  return ds;
}

ValidationSplit hold_out_validation(Dataset dataset, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("hold_out_validation: fraction must lie in (0, 1)");
  if (dataset.scenes.size() < 2) throw InputError("hold_out_validation: need at least two scenes");
  const std::size_t n = dataset.scenes.size();
  const std::size_t held = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * n)), 1, n - 1);
  ValidationSplit split;
  split.validation.meta = {dataset.meta.name + "/validation", dataset.meta.seed};
  split.validation.scenes.assign(std::make_move_iterator(dataset.scenes.end() - static_cast<std::ptrdiff_t>(held)),
                                 std::make_move_iterator(dataset.scenes.end()));
  dataset.scenes.resize(n - held);
  split.train = std::move(dataset);
  return split;
}

ClassPixelStats class_stats(const Dataset& ds) {
  if (ds.scenes.empty() || ds.frame_count() == 0) throw InputError("class_stats: empty dataset");
  ClassPixelStats st;
  st.n_scenes = ds.scenes.size();
  for (const Scene& s : ds.scenes) {
    for (const FrameSample& f : s.frames) {
      ++st.n_frames;
      for (ClassId c : f.label.cells()) ++st.total_cells[index(c)];
    }
  }
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    st.mean_per_scene[k] = static_cast<double>(st.total_cells[k]) / static_cast<double>(st.n_scenes);
  }
  return st;
}

Dataset swap_in_corner_cases(const Dataset& base, std::span<const CornerCaseRecord> ccs, std::uint64_t seed) {
  std::size_t incoming = 0;
  for (const CornerCaseRecord& r : ccs) incoming += r.frames.size();
  const std::size_t available = base.frame_count();
  if (incoming > available) {
    throw InputError("swap_in_corner_cases: " + std::to_string(incoming) + " corner-case frames exceed " +
                     std::to_string(available) + " base frames");
  }
  if (ccs.empty()) return base;

  std::vector<std::pair<std::size_t, std::size_t>> slots;
  std::vector<std::size_t> remaining(base.scenes.size());
  for (std::size_t s = 0; s < base.scenes.size(); ++s) {
    remaining[s] = base.scenes[s].frames.size();
    for (std::size_t f = 0; f < base.scenes[s].frames.size(); ++f) slots.emplace_back(s, f);
  }
  Rng rng(derive_seed(seed, 0x53574150ULL));
  rng.shuffle(slots.begin(), slots.end());

  std::vector<std::vector<char>> removed(base.scenes.size());
  for (std::size_t s = 0; s < base.scenes.size(); ++s) removed[s].assign(base.scenes[s].frames.size(), 0);
  std::size_t count = 0;
  // First pass keeps at least one frame per scene; the second only runs when that is impossible.
  for (int pass = 0; pass < 2 && count < incoming; ++pass) {
    for (const auto& [s, f] : slots) {
      if (count == incoming) break;
      if (removed[s][f]) continue;
      if (pass == 0 && remaining[s] <= 1) continue;
      removed[s][f] = 1;
      --remaining[s];
      ++count;
    }
  }

  Dataset out;
  out.meta = {base.meta.name + "+cc", seed};
  for (std::size_t s = 0; s < base.scenes.size(); ++s) {
    Scene scene{base.scenes[s].scene_id, {}};
    for (std::size_t f = 0; f < base.scenes[s].frames.size(); ++f) {
      if (!removed[s][f]) scene.frames.push_back(base.scenes[s].frames[f]);
    }
    if (!scene.frames.empty()) out.scenes.push_back(std::move(scene));
  }
  for (const CornerCaseRecord& r : ccs) {
    Scene scene{r.id, {}};
    for (const FrameRecord& fr : r.frames) {
      scene.frames.push_back({fr.appearance, fr.truth, FrameOrigin::corner_case, scene.scene_id});
    }
    out.scenes.push_back(std::move(scene));
  }
  return out;
}

EnrichmentResult build_pedestrian_enriched(const Dataset& base, double target_mean, double tol,
                                           const SceneSampler& sampler, std::uint64_t seed, double budget_factor,
                                           double walker_factor) {
  if (base.scenes.empty() || base.frame_count() == 0) throw InputError("build_pedestrian_enriched: empty dataset");
  if (!(tol > 0.0 && tol <= 0.2)) throw InputError("build_pedestrian_enriched: tol must lie in (0, 0.2]");
  if (!(budget_factor >= 0.0)) throw InputError("build_pedestrian_enriched: negative budget");
  const auto n_scenes = static_cast<double>(base.scenes.size());
  std::uint64_t total = pedestrian_total(base);
  const double current = static_cast<double>(total) / n_scenes;
  if (target_mean < current) {
    throw InputError("build_pedestrian_enriched: target " + std::to_string(target_mean) + " below current mean " +
                     std::to_string(current));
  }

  EnrichmentResult result{base, 0, 0, current};
  result.dataset.meta = {base.meta.name + "+ped", seed};
  auto within = [&](double mean) {
    return target_mean == 0.0 ? mean == 0.0 : std::abs(mean - target_mean) / target_mean <= tol;
  };
  if (within(current)) return result;

  std::vector<std::pair<std::size_t, std::size_t>> untouched;
  for (std::size_t s = 0; s < base.scenes.size(); ++s) {
    for (std::size_t f = 0; f < base.scenes[s].frames.size(); ++f) untouched.emplace_back(s, f);
  }
  const auto budget = static_cast<std::size_t>(std::ceil(budget_factor * static_cast<double>(base.frame_count())));
  Rng rng(derive_seed(seed, 0x50454453ULL));
  const SceneSampler heavy = pedestrian_heavy(sampler, walker_factor);
  std::vector<FrameSample> pool;
  std::size_t pool_pos = 0;
  std::uint64_t pool_scene = 0;
  const int frames_per_pool_scene = 12;

  double mean = current;
  while (!within(mean) && result.attempts < budget && !untouched.empty()) {
    ++result.attempts;
    if (pool_pos == pool.size()) {
      pool = roll_scene(heavy, derive_seed(seed, 0x504f4f4cULL + pool_scene), frames_per_pool_scene, "");
      ++pool_scene;
      pool_pos = 0;
    }
    FrameSample candidate = std::move(pool[pool_pos++]);
    const std::size_t pick = rng.below(untouched.size());
    const auto [s, f] = untouched[pick];
    FrameSample& slot = result.dataset.scenes[s].frames[f];
    const std::uint64_t next_total = total - pedestrian_cells(slot) + pedestrian_cells(candidate);
    const double next_mean = static_cast<double>(next_total) / n_scenes;
    if (std::abs(next_mean - target_mean) >= std::abs(mean - target_mean)) continue;
    candidate.scene_id = slot.scene_id;
    candidate.origin = FrameOrigin::base;
    slot = std::move(candidate);
    total = next_total;
    mean = next_mean;
    ++result.replacements;
    untouched[pick] = untouched.back();
    untouched.pop_back();
  }
  result.achieved_mean = mean;
  if (!within(mean)) {
    throw EnrichmentError(mean, "pedestrian enrichment reached mean " + std::to_string(mean) + " of target " +
                                    std::to_string(target_mean) + " after " + std::to_string(result.attempts) +
                                    " attempts");
  }
  return result;
}

Dataset dataset_from_records(std::span<const CornerCaseRecord> records, std::string name) {
  Dataset ds;
  ds.meta = {std::move(name), 0};
  for (const CornerCaseRecord& r : records) {
    Scene scene{r.id, {}};
    for (const FrameRecord& fr : r.frames) {
      scene.frames.push_back({fr.appearance, fr.truth, FrameOrigin::corner_case, scene.scene_id});
    }
    ds.scenes.push_back(std::move(scene));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& root) {
  fs::create_directories(root);
  json scenes = json::array();
  for (const Scene& s : ds.scenes) {
    if (!safe_component(s.scene_id)) throw StorageError("scene id '" + s.scene_id + "' is not a valid directory name");
    const fs::path dir = root / s.scene_id / "frames";
    fs::create_directories(dir);
    json frames = json::array();
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
      const FrameSample& f = s.frames[i];
      const std::string stem = frame_stem(i);
      detail::write_file(dir / (stem + ".truth.pgm"), encode_pgm(f.label));
      detail::write_file(dir / (stem + ".app.bin"), encode_appearance(f.appearance));
      frames.push_back({{"index", i},
                        {"origin", std::string(origin_name(f.origin))},
                        {"rows", f.label.rows()},
                        {"cols", f.label.cols()}});
    }
    scenes.push_back({{"scene_id", s.scene_id}, {"frames", frames}});
  }
  json stats = json::object();
  if (ds.frame_count() > 0) {
    const ClassPixelStats st = class_stats(ds);
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      stats[std::string(class_name(static_cast<ClassId>(k)))] = {{"total_cells", st.total_cells[k]},
                                                                  {"mean_per_scene", st.mean_per_scene[k]}};
    }
  }
  const json doc = {{"format", kDatasetFormat},
                    {"name", ds.meta.name},
                    {"seed", ds.meta.seed},
                    {"frame_count", ds.frame_count()},
                    {"corner_case_frames", ds.frame_count(FrameOrigin::corner_case)},
                    {"scenes", scenes},
                    {"stats", stats}};
  detail::write_file(root / "dataset.json", doc.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& root) {
  const fs::path doc_path = root / "dataset.json";
  if (!fs::exists(doc_path)) throw FormatError(doc_path.string(), "missing dataset index");
  Dataset ds;
  try {
    const json doc = json::parse(detail::read_file(doc_path));
    if (doc.at("format").get<std::string>() != kDatasetFormat) throw FormatError(doc_path.string(), "unsupported format");
    ds.meta = {doc.at("name").get<std::string>(), doc.at("seed").get<std::uint64_t>()};
    for (const json& js : doc.at("scenes")) {
      Scene scene{js.at("scene_id").get<std::string>(), {}};
      if (!safe_component(scene.scene_id)) throw FormatError(doc_path.string(), "invalid scene id");
      for (const json& jf : js.at("frames")) {
        const std::string stem = frame_stem(jf.at("index").get<std::size_t>());
        const fs::path dir = root / scene.scene_id / "frames";
        const fs::path truth = dir / (stem + ".truth.pgm");
        const fs::path app = dir / (stem + ".app.bin");
        if (!fs::exists(truth)) throw FormatError(truth.string(), "missing frame file");
        if (!fs::exists(app)) throw FormatError(app.string(), "missing frame file");
        FrameSample f;
        f.label = decode_pgm(detail::read_file(truth), truth.string());
        f.appearance = decode_appearance(detail::read_file(app), f.label.rows(), f.label.cols(), app.string());
        f.origin = jf.at("origin").get<std::string>() == "corner_case" ? FrameOrigin::corner_case : FrameOrigin::base;
        f.scene_id = scene.scene_id;
        scene.frames.push_back(std::move(f));
      }
      ds.scenes.push_back(std::move(scene));
    }
  } catch (const json::exception& e) {
    throw FormatError(doc_path.string(), e.what());
  }
  return ds;
}

}  // namespace aeye
