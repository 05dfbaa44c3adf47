#include "aeye/live.hpp"

#include <cmath>
#include <cstdio>

#include "aeye/error.hpp"

namespace aeye {

namespace {

std::string live_record_id(std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "live-%04zu", n);
  return buf;
}

}  // namespace

std::string_view phase_name(LiveSession::Phase p) noexcept {
  switch (p) {
    case LiveSession::Phase::lobby:
      return "lobby";
    case LiveSession::Phase::driving:
      return "driving";
    case LiveSession::Phase::labeling:
      return "labeling";
    case LiveSession::Phase::paused:
      return "paused";
    case LiveSession::Phase::ended:
      return "ended";
  }
  return "?";
}

LiveSession::LiveSession(const RigConfig& cfg, PerceptionChannel perception, RecordSink on_record)
    : cfg_(cfg),
      world_(cfg.world),
      perception_(std::move(perception)),
      on_record_(std::move(on_record)),
      state_(world_.init()),
      buffer_(cfg.capture.capacity()),
      gate_(static_cast<int>(std::lround(cfg.rearm_seconds / kTickSeconds))),
      hold_ticks_(static_cast<std::uint64_t>(std::lround(cfg.live.input_hold_s / kTickSeconds))) {}

std::optional<Role> LiveSession::role_of(ClientId id) const noexcept {
  for (std::size_t r = 0; r < roles_.size(); ++r) {
    if (roles_[r] == id) return static_cast<Role>(r);
  }
  return std::nullopt;
}

ControlCommand LiveSession::current_input(Role role) const noexcept {
  const auto& held = inputs_[static_cast<std::size_t>(role)];
  if (!held || state_.tick - held->tick > hold_ticks_) return {};
  return held->cmd;
}

WireMessage LiveSession::message(WireBody body) { return {++seq_, std::move(body)}; }

void LiveSession::broadcast(std::vector<Outgoing>& out, const WireBody& body) {
  for (const auto& holder : roles_) {
    if (holder) out.push_back({*holder, message(body)});
  }
}

void LiveSession::reject(std::vector<Outgoing>& out, ClientId to, std::string reason) {
  out.push_back({to, message(Rejection{std::move(reason)})});
}

std::vector<LiveSession::Outgoing> LiveSession::receive(ClientId from, const WireMessage& msg) {
  std::vector<Outgoing> out;
  if (phase_ == Phase::ended) {
    reject(out, from, "session has ended");
    return out;
  }
  if (const auto* claim = std::get_if<RoleClaim>(&msg.body)) {
    auto& slot = roles_[static_cast<std::size_t>(claim->role)];
    if (role_of(from)) {
      reject(out, from, "connection already holds role " + std::string(role_name(*role_of(from))));
    } else if (slot) {
      reject(out, from, "role " + std::string(role_name(claim->role)) + " is already claimed");
    } else {
      slot = from;
      out.push_back({from, message(SessionEvent{SessionEventKind::role_assigned, {}, std::string(role_name(claim->role))})});
      if (roles_[0] && roles_[1]) {
        if (phase_ == Phase::lobby) {
          phase_ = Phase::driving;
          broadcast(out, SessionEvent{SessionEventKind::started, {}, {}});
        } else if (phase_ == Phase::paused) {
          phase_ = label_pending_ ? Phase::labeling : Phase::driving;
          broadcast(out, SessionEvent{SessionEventKind::resumed, {}, std::string(phase_name(phase_))});
        }
      }
    }
  } else if (const auto* input = std::get_if<ControlInput>(&msg.body)) {
    if (role_of(from) != input->role) {
      reject(out, from, "control_input for a role this connection does not hold");
    } else {
      inputs_[static_cast<std::size_t>(input->role)] = HeldInput{clamp_to_range(input->cmd), state_.tick};
    }
  } else if (const auto* label = std::get_if<InterventionLabel>(&msg.body)) {
    if (role_of(from) != Role::safety) {
      reject(out, from, "only the safety driver labels interventions");
    } else if (phase_ != Phase::labeling || !pending_) {
      reject(out, from, "no intervention is waiting for a label");
    } else {
      pending_->event.cause = label->cause;
      pending_->event.comment = label->comment;
      log_.events.push_back(
          {pending_->km_driven_at_event, pending_->ride_duration_min, label->cause, pending_->id});
      if (on_record_) on_record_(*pending_);
      pending_.reset();
      label_pending_ = false;
      phase_ = Phase::driving;
      broadcast(out, SessionEvent{SessionEventKind::resumed, {}, "driving"});
    }
  } else {
    reject(out, from, "clients may only send role_claim, control_input and intervention_label");
  }
  return out;
}

std::vector<LiveSession::Outgoing> LiveSession::disconnect(ClientId id) {
  std::vector<Outgoing> out;
  const auto role = role_of(id);
  if (!role) return out;
  roles_[static_cast<std::size_t>(*role)].reset();
  inputs_[static_cast<std::size_t>(*role)].reset();
  if (phase_ == Phase::driving || phase_ == Phase::labeling) {
    phase_ = Phase::paused;
    broadcast(out, SessionEvent{SessionEventKind::paused, {}, std::string(role_name(*role)) + " driver disconnected"});
  }
  return out;
}

std::vector<LiveSession::Outgoing> LiveSession::tick() {
  std::vector<Outgoing> out;
  if (phase_ != Phase::driving) return out;

  const std::uint64_t tick = state_.tick;
  const Rendering rendering = world_.render(state_);
  const SemanticGrid view = perception_(rendering, tick);
  const double speed_kmh = mps_to_kmh(state_.ego.speed);
  const auto light = world_.light_ahead(state_);
  const std::optional<LightPhase> phase = light ? std::optional(light->phase) : std::nullopt;

  // Each role sees only its own channel.
  out.push_back({*roles_[0], message(StateFrame{tick, view, std::nullopt, speed_kmh, phase})});
  out.push_back({*roles_[1], message(StateFrame{tick, std::nullopt, rendering.appearance, speed_kmh, phase})});

  const Arbitration arb = arbitrate(current_input(Role::semantic), current_input(Role::safety), cfg_.deadband);
  if (gate_.update(arb.intervention)) {
    if (buffer_.full()) {
      const double timestamp = static_cast<double>(tick) * kTickSeconds;
      // The cause is a placeholder until the safety driver labels the event.
      const InterventionEvent event{timestamp, state_.odometer_km, InterventionCause::traffic_rule_violation, ""};
      CornerCaseRecord record = snapshot(buffer_, event, live_record_id(++n_cc_), cfg_.capture.fps);
      record.km_driven_at_event = state_.odometer_km;
      record.ride_duration_min = timestamp / 60.0;
      broadcast(out, SessionEvent{SessionEventKind::cc_captured, record.id, {}});
      pending_ = std::move(record);
      label_pending_ = true;
      phase_ = Phase::labeling;
    } else {
      ++log_.underfull_interventions;
    }
  }
  buffer_.push(FrameRecord{tick, static_cast<double>(tick) * kTickSeconds, rendering.semantic, view,
                           rendering.appearance, speed_kmh, arb.effective});
  state_ = world_.step(state_, arb.effective);
  if (state_.collision) ++log_.collisions;
  log_.distance_km = state_.odometer_km;
  log_.time_min = static_cast<double>(state_.tick) * kTickSeconds / 60.0;
  log_.ticks = state_.tick;

  const StopCondition& stop = cfg_.stop;
  if ((stop.max_km && state_.odometer_km >= *stop.max_km) ||
      (stop.max_minutes && log_.time_min >= *stop.max_minutes) || (stop.max_cc && n_cc_ >= *stop.max_cc)) {
    if (phase_ == Phase::driving) {
      auto ended = end("stop condition reached");
      out.insert(out.end(), ended.begin(), ended.end());
    }
  }
  return out;
}

std::vector<LiveSession::Outgoing> LiveSession::end(const std::string& reason) {
  std::vector<Outgoing> out;
  if (phase_ == Phase::ended) return out;
  phase_ = Phase::ended;
  broadcast(out, SessionEvent{SessionEventKind::ended, {}, reason});
  return out;
}

}  // namespace aeye
