#include "aeye/session.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "aeye/agents.hpp"
#include "aeye/error.hpp"
#include "json_codec.hpp"

namespace aeye {

using nlohmann::json;

bool InterventionGate::update(bool intervening) noexcept {
  if (intervening) {
    quiet_ = 0;
    if (armed_) {
      armed_ = false;
      return true;
    }
    return false;
  }
  if (!armed_ && ++quiet_ >= rearm_ticks_) armed_ = true;
  return false;
}

PerceptionChannel::PerceptionChannel(DegradationParams params) : params_(params) { validate(*params_); }

PerceptionChannel::PerceptionChannel(PerceiverModel model) : model_(std::move(model)) {}

PerceptionChannel PerceptionChannel::from_config(const PerceptionSource& source) {
  if (source.kind == PerceptionKind::model) return PerceptionChannel(load_model(source.model_path));
  return PerceptionChannel(source.degradation);
}

SemanticGrid PerceptionChannel::operator()(const Rendering& rendering, std::uint64_t tick) const {
  if (model_) return predict(*model_, rendering.appearance);
  DegradationParams p = *params_;
  p.seed = derive_seed(params_->seed, tick);
  return degrade(rendering.semantic, p);
}

ReactionDelay::ReactionDelay(int ticks) : line_(static_cast<std::size_t>(std::max(ticks, 0)), Entry{}) {}

ReactionDelay::Entry ReactionDelay::push(Entry now) {
  line_.push_back(std::move(now));
  Entry out = std::move(line_.front());
  line_.pop_front();
  return out;
}

namespace {

std::string record_id(const std::string& prefix, std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", n);
  return prefix + "-" + buf;
}

// Simulated ticks without odometer progress before a campaign is declared stuck.
constexpr std::uint64_t kStallTicks = 3000;

bool reached(const StopCondition& stop, const WorldState& state, std::size_t n_cc) {
  if (stop.max_km && state.odometer_km >= *stop.max_km) return true;
  if (stop.max_minutes && static_cast<double>(state.tick) * kTickSeconds / 60.0 >= *stop.max_minutes) return true;
  if (stop.max_cc && n_cc >= *stop.max_cc) return true;
  return false;
}

}  // namespace

CampaignResult run_headless_campaign(const RigConfig& cfg, const PerceptionChannel& perception,
                                     const StopCondition& stop, const CampaignOptions& options) {
  validate(stop);
  const World world(cfg.world);
  WorldState state = world.init();
  RollingBuffer buffer(cfg.capture.capacity());
  InterventionGate gate(static_cast<int>(std::lround(cfg.rearm_seconds / kTickSeconds)));
  ReactionDelay delay(cfg.safety.reaction_delay_ticks);
  const auto window_ticks = static_cast<std::uint64_t>(cfg.capture.capacity());
  std::optional<std::uint64_t> last_red_overrun;

  CampaignResult result;
  std::size_t n_cc = 0;
  double progress_km = 0.0;
  std::uint64_t progress_tick = 0;
  while (!reached(stop, state, n_cc)) {
    if (state.odometer_km > progress_km) {
      progress_km = state.odometer_km;
      progress_tick = state.tick;
    } else if (state.tick - progress_tick >= kStallTicks) {
      throw Error("campaign stalled: ego has not moved for " + std::to_string(kStallTicks) + " ticks at " +
                  std::to_string(state.odometer_km) + " km");
    }
    const std::uint64_t tick = state.tick;
    const Rendering rendering = world.render(state);
    const SemanticGrid view = perception(rendering, tick);
    const double speed_kmh = mps_to_kmh(state.ego.speed);
    const auto light = world.light_ahead(state);

    const ControlCommand semantic_cmd =
        semantic_policy(view, speed_kmh, cfg.semantic, light ? std::optional(light->phase) : std::nullopt);
    const auto hazard = nearest_corridor_hazard(rendering.semantic, cfg.safety.geometry,
                                                cfg.safety.corridor_halfwidth_m);
    const ControlCommand safety_now = safety_policy(rendering.semantic, speed_kmh, semantic_cmd.brake, cfg.safety);
    const ReactionDelay::Entry safety =
        delay.push({safety_now, hazard ? std::optional(hazard->cls) : std::nullopt});
    const Arbitration arb = arbitrate(semantic_cmd, safety.cmd, cfg.deadband);

    if (gate.update(arb.intervention)) {
      if (buffer.full()) {
        const double timestamp = static_cast<double>(tick) * kTickSeconds;
        const bool overran = last_red_overrun && tick - *last_red_overrun <= window_ticks;
        InterventionEvent event{timestamp, state.odometer_km, auto_label(safety.hazard, overran), "auto"};
        CornerCaseRecord record = snapshot(buffer, event, record_id(options.id_prefix, n_cc + 1), cfg.capture.fps);
        record.km_driven_at_event = state.odometer_km;
        record.ride_duration_min = timestamp / 60.0;
        result.log.events.push_back({state.odometer_km, timestamp / 60.0, event.cause, record.id});
        ++n_cc;
        if (options.sink) options.sink(record);
        if (options.keep_records) result.records.push_back(std::move(record));
      } else {
        ++result.log.underfull_interventions;
      }
    }

    buffer.push(FrameRecord{tick, static_cast<double>(tick) * kTickSeconds, rendering.semantic, view,
                            rendering.appearance, speed_kmh, arb.effective});
    result.commands.push_back(arb.effective);
    state = world.step(state, arb.effective);
    if (state.collision) ++result.log.collisions;
    if (state.ran_red_light) last_red_overrun = state.tick;
  }
  result.log.distance_km = state.odometer_km;
  result.log.time_min = static_cast<double>(state.tick) * kTickSeconds / 60.0;
  result.log.ticks = state.tick;
  return result;
}

BackgroundPersister::BackgroundPersister(std::filesystem::path root)
    : root_(std::move(root)), worker_([this] { run(); }) {}

BackgroundPersister::~BackgroundPersister() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void BackgroundPersister::enqueue(CornerCaseRecord record) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(record));
  }
  cv_.notify_all();
}

void BackgroundPersister::flush() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
  if (error_) {
    auto e = error_;
    error_ = nullptr;
    std::rethrow_exception(e);
  }
}

void BackgroundPersister::run() {
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
    if (queue_.empty()) return;
    CornerCaseRecord record = std::move(queue_.front());
    queue_.pop_front();
    busy_ = true;
    lock.unlock();
    std::exception_ptr err;
    try {
      persist(record, root_);
    } catch (...) {
      err = std::current_exception();
    }
    lock.lock();
    busy_ = false;
    if (err && !error_) error_ = err;
    cv_.notify_all();
  }
}

json to_json(const CommandLog& log) {
  const RigConfig defaults;
  RigConfig holder = defaults;
  holder.world = log.world;
  return {{"format", "aeye-commands/1"}, {"world", to_json(holder).at("world")}, {"commands", log.commands}};
}

CommandLog command_log_from_json(const json& j) {
  if (j.value("format", std::string{}) != "aeye-commands/1") throw InputError("command log: unsupported format");
  CommandLog log;
  log.world = parse_config(json{{"world", j.at("world")}}).world;
  try {
    log.commands = j.at("commands").get<std::vector<ControlCommand>>();
  } catch (const json::exception& e) {
    throw InputError(std::string("command log: ") + e.what());
  }
  return log;
}

std::vector<ReplayFrame> replay(const CornerCaseRecord& record) {
  std::vector<ReplayFrame> out;
  out.reserve(record.frames.size());
  for (const FrameRecord& f : record.frames) {
    out.push_back({f.tick_index, f.timestamp, f.predicted, f.appearance, f.ego_speed_kmh, std::nullopt});
  }
  return out;
}

std::vector<ReplayFrame> replay(const CommandLog& log, WorldState* final_state) {
  const World world(log.world);
  WorldState state = world.init();
  std::vector<ReplayFrame> out;
  out.reserve(log.commands.size());
  for (const ControlCommand& cmd : log.commands) {
    Rendering r = world.render(state);
    const auto light = world.light_ahead(state);
    out.push_back({state.tick, static_cast<double>(state.tick) * kTickSeconds, std::move(r.semantic),
                   std::move(r.appearance), mps_to_kmh(state.ego.speed),
                   light ? std::optional(light->phase) : std::nullopt});
    state = world.step(state, cmd);
  }
  if (final_state) *final_state = state;
  return out;
}

std::filesystem::path default_data_root() {
  if (const char* dir = std::getenv("AEYE_DATA_DIR"); dir && *dir) return dir;
  return "aeye-data";
}

}  // namespace aeye
