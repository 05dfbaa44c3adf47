#include "aeye/config.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "aeye/error.hpp"
#include "byte_io.hpp"

namespace aeye {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown fields.
class Section {
 public:
  Section(const json* obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (obj_ && !obj_->is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  Section sub(const char* key) {
    seen_.insert(key);
    const json* child = find(key);
    return Section(child, name(key));
  }

  void get(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(name(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(name(key), "must be finite");
    }
  }

  void get(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(name(key), "expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(name(key), "integer out of range");
      out = static_cast<int>(x);
    }
  }

  void get(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) out = unsigned_value(*v, name(key));
  }

  void get(const char* key, std::uint16_t& out) {
    if (const json* v = take(key)) {
      const std::uint64_t x = unsigned_value(*v, name(key));
      if (x > 65535) throw ConfigError(name(key), "must fit in 16 bits");
      out = static_cast<std::uint16_t>(x);
    }
  }

  void get(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(name(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void get(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(name(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void get(const char* key, std::optional<double>& out) {
    if (const json* v = take(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      double x = 0.0;
      get_number(*v, name(key), x);
      out = x;
    }
  }

  void get(const char* key, std::optional<std::size_t>& out) {
    if (const json* v = take(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      out = static_cast<std::size_t>(unsigned_value(*v, name(key)));
    }
  }

  void get(const char* key, std::vector<std::uint64_t>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(name(key), "expected an array of integers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        out.push_back(unsigned_value((*v)[i], name(key) + "[" + std::to_string(i) + "]"));
      }
    }
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [key, _] : obj_->items()) {
      if (!seen_.count(key)) throw ConfigError(name(key.c_str()), "unknown field");
    }
  }

 private:
  const json* find(const char* key) const {
    if (!obj_) return nullptr;
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }
  const json* take(const char* key) {
    seen_.insert(key);
    return find(key);
  }
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  static void get_number(const json& v, const std::string& field, double& out) {
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(field, "must be finite");
  }
  static std::uint64_t unsigned_value(const json& v, const std::string& field) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(field, "expected a non-negative integer");
  }

  const json* obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_world(Section s, WorldConfig& w) {
  s.get("seed", w.seed);
  s.get("map_extent", w.map_extent);
  s.get("npc_vehicles", w.npc_vehicles);
  s.get("npc_walkers", w.npc_walkers);
  s.get("npc_min", w.npc_min);
  s.get("npc_max", w.npc_max);
  s.get("clouds", w.clouds);
  s.get("wind", w.wind);
  s.get("sun_altitude", w.sun_altitude);
  s.get("speed_limit", w.speed_limit_kmh);
  s.get("walker_cross_prob", w.walker_cross_prob);
  s.get("light_spacing", w.light_spacing);
  s.get("check_offroad", w.check_offroad);
  s.get("grid_rows", w.view.rows);
  s.get("grid_cols", w.view.cols);
  s.get("view_range", w.view.range_m);
  double fov_deg = w.view.fov_rad * 180.0 / std::numbers::pi;
  s.get("fov_deg", fov_deg);
  w.view.fov_rad = fov_deg * std::numbers::pi / 180.0;
  s.get("noise_sigma", w.noise_sigma);
  s.finish();
}

void read_degradation(Section& s, DegradationParams& d) {
  s.get("quality", d.quality);
  s.get("min_blob_cells", d.min_blob_cells);
  s.get("blob_dropout_rate", d.blob_dropout_rate);
  s.get("distance_noise_base", d.distance_noise_base);
  s.get("boundary_flip_rate", d.boundary_flip_rate);
  s.get("seed", d.seed);
}

void read_perception(Section s, PerceptionSource& p) {
  std::string source = p.kind == PerceptionKind::degrade ? "degrade" : "model";
  s.get("source", source);
  if (source == "degrade") {
    p.kind = PerceptionKind::degrade;
  } else if (source == "model") {
    p.kind = PerceptionKind::model;
  } else {
    throw ConfigError("perception.source", "expected \"degrade\" or \"model\"");
  }
  read_degradation(s, p.degradation);
  s.get("model_path", p.model_path);
  s.finish();
}

void read_semantic(Section s, SemanticPolicyParams& p) {
  s.get("cruise_speed", p.cruise_speed_kmh);
  s.get("corridor_halfwidth_m", p.corridor_halfwidth_m);
  s.get("brake_distance_rows", p.brake_distance_rows);
  s.get("light_stop", p.light_stop);
  s.get("lookahead_near_m", p.lookahead_near_m);
  s.get("lookahead_far_m", p.lookahead_far_m);
  s.finish();
}

void read_safety(Section s, SafetyPolicyParams& p) {
  s.get("ttc_threshold", p.ttc_threshold_s);
  s.get("reaction_delay", p.reaction_delay_ticks);
  s.get("corridor_halfwidth_m", p.corridor_halfwidth_m);
  s.finish();
}

void read_sampler(Section s, SceneSampler& p) {
  s.get("vehicles_min", p.vehicles_min);
  s.get("vehicles_max", p.vehicles_max);
  s.get("walkers_min", p.walkers_min);
  s.get("walkers_max", p.walkers_max);
  s.get("clouds_min", p.clouds_min);
  s.get("clouds_max", p.clouds_max);
  s.get("wind_min", p.wind_min);
  s.get("wind_max", p.wind_max);
  s.get("altitude_min", p.altitude_min);
  s.get("altitude_max", p.altitude_max);
  s.get("ticks_per_frame", p.ticks_per_frame);
  s.finish();
}

void read_train(Section s, TrainConfig& t) {
  s.get("epochs", t.epochs);
  s.get("lr0", t.lr0);
  s.get("poly_power", t.poly_power);
  s.get("moment1", t.moment1);
  s.get("moment2", t.moment2);
  s.get("epsilon", t.epsilon);
  s.get("batch_cells", t.batch_cells);
  s.get("window_radius", t.window_radius);
  s.get("seed", t.seed);
  s.finish();
}

void read_experiment(Section s, ExperimentConfig& e) {
  s.get("corpus_seed", e.corpus_seed);
  s.get("base_scenes", e.base_scenes);
  s.get("frames_per_scene", e.frames_per_scene);
  s.get("natural_test_scenes", e.natural_test_scenes);
  s.get("cc_train_records", e.cc_train_records);
  s.get("cc_test_records", e.cc_test_records);
  s.get("cc_quality", e.cc_quality);
  s.get("cc_max_km", e.cc_max_km);
  s.get("seeds", e.seeds);
  s.get("enrich_tol", e.enrich_tol);
  s.get("walker_factor", e.walker_factor);
  s.finish();
}

// Geometry and the scene sampler's base world follow the world section.
void sync(RigConfig& cfg) {
  cfg.semantic.geometry = cfg.world.view;
  cfg.safety.geometry = cfg.world.view;
  cfg.sampler.base = cfg.world;
  cfg.sampler.driving = cfg.semantic;
}

void validate(const ExperimentConfig& e) {
  if (e.base_scenes < 2) throw ConfigError("experiment.base_scenes", "need at least 2");
  if (e.frames_per_scene < 1) throw ConfigError("experiment.frames_per_scene", "need at least 1");
  if (e.natural_test_scenes < 1) throw ConfigError("experiment.natural_test_scenes", "need at least 1");
  if (e.cc_train_records < 1) throw ConfigError("experiment.cc_train_records", "need at least 1");
  if (e.cc_test_records < 1) throw ConfigError("experiment.cc_test_records", "need at least 1");
  if (!(e.cc_quality >= 0.0 && e.cc_quality <= 1.0)) throw ConfigError("experiment.cc_quality", "must lie in [0, 1]");
  if (!(e.cc_max_km > 0.0)) throw ConfigError("experiment.cc_max_km", "must be positive");
  if (e.seeds.empty()) throw ConfigError("experiment.seeds", "need at least one seed");
  if (!(e.enrich_tol > 0.0 && e.enrich_tol <= 0.2)) throw ConfigError("experiment.enrich_tol", "must lie in (0, 0.2]");
  if (!(e.walker_factor >= 1.0)) throw ConfigError("experiment.walker_factor", "must be at least 1");
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void validate(const StopCondition& stop) {
  if (!stop.max_km && !stop.max_minutes && !stop.max_cc) {
    throw ConfigError("stop", "set at least one of max_km, max_minutes, max_cc");
  }
  if (stop.max_km && !(*stop.max_km > 0.0)) throw ConfigError("stop.max_km", "must be positive");
  if (stop.max_minutes && !(*stop.max_minutes > 0.0)) throw ConfigError("stop.max_minutes", "must be positive");
  if (stop.max_cc && *stop.max_cc == 0) throw ConfigError("stop.max_cc", "must be positive");
}

namespace {

// Runs a section validator and qualifies the reported field with the section name.
template <typename T>
void validate_section(const char* section, const T& value) {
  try {
    validate(value);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(section) + "." + e.field(), e.reason());
  }
}

}  // namespace

void validate(const RigConfig& cfg) {
  validate_section("world", cfg.world);
  validate_section("perception", cfg.perception.degradation);
  if (cfg.perception.kind == PerceptionKind::model && cfg.perception.model_path.empty()) {
    throw ConfigError("perception.model_path", "required when source is \"model\"");
  }
  validate_section("semantic_policy", cfg.semantic);
  validate_section("safety_policy", cfg.safety);
  if (!(cfg.deadband >= 0.0 && cfg.deadband <= 0.2)) throw ConfigError("arbitration.deadband", "must lie in [0, 0.2]");
  if (!(cfg.rearm_seconds >= 0.0)) throw ConfigError("arbitration.rearm_seconds", "must be non-negative");
  if (cfg.capture.fps != 10) throw ConfigError("capture.fps", "must equal the 10 Hz simulation rate");
  if (cfg.capture.seconds < 1) throw ConfigError("capture.seconds", "must be at least 1");
  validate(cfg.stop);
  if (!(cfg.live.input_hold_s >= 0.0)) throw ConfigError("live.input_hold_s", "must be non-negative");
  validate_section("sampler", cfg.sampler);
  validate_section("train", cfg.train);
  validate(cfg.experiment);
}

RigConfig parse_config(const json& doc) {
  RigConfig cfg;
  cfg.stop.max_km = 10.0;
  Section root(&doc, "");
  read_world(root.sub("world"), cfg.world);
  read_perception(root.sub("perception"), cfg.perception);
  read_semantic(root.sub("semantic_policy"), cfg.semantic);
  read_safety(root.sub("safety_policy"), cfg.safety);
  {
    Section s = root.sub("arbitration");
    s.get("deadband", cfg.deadband);
    s.get("rearm_seconds", cfg.rearm_seconds);
    s.finish();
  }
  {
    Section s = root.sub("capture");
    s.get("fps", cfg.capture.fps);
    s.get("seconds", cfg.capture.seconds);
    s.finish();
  }
  {
    Section s = root.sub("stop");
    s.get("max_km", cfg.stop.max_km);
    s.get("max_minutes", cfg.stop.max_minutes);
    s.get("max_cc", cfg.stop.max_cc);
    s.finish();
  }
  {
    Section s = root.sub("live");
    s.get("host", cfg.live.host);
    s.get("port", cfg.live.port);
    s.get("static_dir", cfg.live.static_dir);
    s.get("input_hold_s", cfg.live.input_hold_s);
    s.finish();
  }
  read_sampler(root.sub("sampler"), cfg.sampler);
  read_train(root.sub("train"), cfg.train);
  read_experiment(root.sub("experiment"), cfg.experiment);
  root.finish();
  sync(cfg);
  validate(cfg);
  return cfg;
}

RigConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const StorageError& e) {
    throw ConfigError("<file>", e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

RigConfig default_config() { return parse_config(json::object()); }

void apply_seed(RigConfig& cfg, std::uint64_t seed) {
  cfg.world.seed = seed;
  cfg.perception.degradation.seed = derive_seed(seed, 1);
  cfg.train.seed = derive_seed(seed, 2);
  cfg.experiment.corpus_seed = derive_seed(seed, 3);
  sync(cfg);
}

json to_json(const RigConfig& cfg) {
  const WorldConfig& w = cfg.world;
  const DegradationParams& d = cfg.perception.degradation;
  const SceneSampler& sm = cfg.sampler;
  const TrainConfig& t = cfg.train;
  const ExperimentConfig& e = cfg.experiment;
  return {
      {"world",
       {{"seed", w.seed},
        {"map_extent", w.map_extent},
        {"npc_vehicles", w.npc_vehicles},
        {"npc_walkers", w.npc_walkers},
        {"npc_min", w.npc_min},
        {"npc_max", w.npc_max},
        {"clouds", w.clouds},
        {"wind", w.wind},
        {"sun_altitude", w.sun_altitude},
        {"speed_limit", w.speed_limit_kmh},
        {"walker_cross_prob", w.walker_cross_prob},
        {"light_spacing", w.light_spacing},
        {"check_offroad", w.check_offroad},
        {"grid_rows", w.view.rows},
        {"grid_cols", w.view.cols},
        {"view_range", w.view.range_m},
        {"fov_deg", w.view.fov_rad * 180.0 / std::numbers::pi},
        {"noise_sigma", w.noise_sigma}}},
      {"perception",
       {{"source", cfg.perception.kind == PerceptionKind::degrade ? "degrade" : "model"},
        {"quality", d.quality},
        {"min_blob_cells", d.min_blob_cells},
        {"blob_dropout_rate", d.blob_dropout_rate},
        {"distance_noise_base", d.distance_noise_base},
        {"boundary_flip_rate", d.boundary_flip_rate},
        {"seed", d.seed},
        {"model_path", cfg.perception.model_path}}},
      {"semantic_policy",
       {{"cruise_speed", cfg.semantic.cruise_speed_kmh},
        {"corridor_halfwidth_m", cfg.semantic.corridor_halfwidth_m},
        {"brake_distance_rows", cfg.semantic.brake_distance_rows},
        {"light_stop", cfg.semantic.light_stop},
        {"lookahead_near_m", cfg.semantic.lookahead_near_m},
        {"lookahead_far_m", cfg.semantic.lookahead_far_m}}},
      {"safety_policy",
       {{"ttc_threshold", cfg.safety.ttc_threshold_s},
        {"reaction_delay", cfg.safety.reaction_delay_ticks},
        {"corridor_halfwidth_m", cfg.safety.corridor_halfwidth_m}}},
      {"arbitration", {{"deadband", cfg.deadband}, {"rearm_seconds", cfg.rearm_seconds}}},
      {"capture", {{"fps", cfg.capture.fps}, {"seconds", cfg.capture.seconds}}},
      {"stop",
       {{"max_km", optional_json(cfg.stop.max_km)},
        {"max_minutes", optional_json(cfg.stop.max_minutes)},
        {"max_cc", cfg.stop.max_cc ? json(*cfg.stop.max_cc) : json(nullptr)}}},
      {"live",
       {{"host", cfg.live.host},
        {"port", cfg.live.port},
        {"static_dir", cfg.live.static_dir},
        {"input_hold_s", cfg.live.input_hold_s}}},
      {"sampler",
       {{"vehicles_min", sm.vehicles_min},
        {"vehicles_max", sm.vehicles_max},
        {"walkers_min", sm.walkers_min},
        {"walkers_max", sm.walkers_max},
        {"clouds_min", sm.clouds_min},
        {"clouds_max", sm.clouds_max},
        {"wind_min", sm.wind_min},
        {"wind_max", sm.wind_max},
        {"altitude_min", sm.altitude_min},
        {"altitude_max", sm.altitude_max},
        {"ticks_per_frame", sm.ticks_per_frame}}},
      {"train",
       {{"epochs", t.epochs},
        {"lr0", t.lr0},
        {"poly_power", t.poly_power},
        {"moment1", t.moment1},
        {"moment2", t.moment2},
        {"epsilon", t.epsilon},
        {"batch_cells", t.batch_cells},
        {"window_radius", t.window_radius},
        {"seed", t.seed}}},
      {"experiment",
       {{"corpus_seed", e.corpus_seed},
        {"base_scenes", e.base_scenes},
        {"frames_per_scene", e.frames_per_scene},
        {"natural_test_scenes", e.natural_test_scenes},
        {"cc_train_records", e.cc_train_records},
        {"cc_test_records", e.cc_test_records},
        {"cc_quality", e.cc_quality},
        {"cc_max_km", e.cc_max_km},
        {"seeds", e.seeds},
        {"enrich_tol", e.enrich_tol},
        {"walker_factor", e.walker_factor}}},
  };
}

}  // namespace aeye
