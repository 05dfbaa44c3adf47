#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace aeye {

struct ControlCommand {
  double steer = 0.0;     // [-1, 1], positive steers left
  double throttle = 0.0;  // [0, 1]
  double brake = 0.0;     // [0, 1]

  friend bool operator==(const ControlCommand&, const ControlCommand&) = default;
};

bool is_finite(const ControlCommand& cmd) noexcept;
bool in_range(const ControlCommand& cmd) noexcept;
/// Throws InputError if any field is non-finite or out of range.
void validate(const ControlCommand& cmd);
ControlCommand clamp_to_range(const ControlCommand& cmd) noexcept;

enum class InterventionCause {
  overlooked_walker,
  overlooked_vehicle,
  traffic_rule_violation,
  boredom,
};

std::string_view cause_name(InterventionCause c) noexcept;
std::optional<InterventionCause> cause_from_name(std::string_view name) noexcept;

struct InterventionEvent {
  double timestamp = 0.0;  // seconds of simulation time
  double odometer_km = 0.0;
  InterventionCause cause = InterventionCause::overlooked_walker;
  std::string comment;

  friend bool operator==(const InterventionEvent&, const InterventionEvent&) = default;
};

struct Arbitration {
  ControlCommand effective;
  bool intervention = false;
};

inline constexpr double kDefaultDeadband = 0.05;

/// Safety input wins outright as soon as any of its fields leaves the deadband.
Arbitration arbitrate(const ControlCommand& semantic_cmd, const ControlCommand& safety_cmd,
                      double deadband = kDefaultDeadband);

}  // namespace aeye
