#include "aeye/arbitration.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "aeye/error.hpp"

namespace aeye {

namespace {

constexpr std::array<std::string_view, 4> kCauseNames = {
    "overlooked_walker", "overlooked_vehicle", "traffic_rule_violation", "boredom",
};

}  // namespace

bool is_finite(const ControlCommand& cmd) noexcept {
  return std::isfinite(cmd.steer) && std::isfinite(cmd.throttle) && std::isfinite(cmd.brake);
}

bool in_range(const ControlCommand& cmd) noexcept {
  return is_finite(cmd) && cmd.steer >= -1.0 && cmd.steer <= 1.0 && cmd.throttle >= 0.0 &&
         cmd.throttle <= 1.0 && cmd.brake >= 0.0 && cmd.brake <= 1.0;
}

void validate(const ControlCommand& cmd) {
  if (!is_finite(cmd)) throw InputError("control command has non-finite fields");
  if (!in_range(cmd)) throw InputError("control command out of range");
}

ControlCommand clamp_to_range(const ControlCommand& cmd) noexcept {
  return {std::clamp(cmd.steer, -1.0, 1.0), std::clamp(cmd.throttle, 0.0, 1.0), std::clamp(cmd.brake, 0.0, 1.0)};
}

std::string_view cause_name(InterventionCause c) noexcept { return kCauseNames[static_cast<std::size_t>(c)]; }

std::optional<InterventionCause> cause_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kCauseNames.size(); ++i) {
    if (kCauseNames[i] == name) return static_cast<InterventionCause>(i);
  }
  return std::nullopt;
}

Arbitration arbitrate(const ControlCommand& semantic_cmd, const ControlCommand& safety_cmd, double deadband) {
  const bool active = std::abs(safety_cmd.steer) > deadband || std::abs(safety_cmd.throttle) > deadband ||
                      std::abs(safety_cmd.brake) > deadband;
  if (active) return {safety_cmd, true};
  return {semantic_cmd, false};
}

}  // namespace aeye
