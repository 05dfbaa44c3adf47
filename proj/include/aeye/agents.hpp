#pragma once

#include <optional>

#include "aeye/arbitration.hpp"
#include "aeye/semantic.hpp"
#include "aeye/world.hpp"

namespace aeye {

/// Scripted stand-in for the driver who only sees the predicted view.
struct SemanticPolicyParams {
  double cruise_speed_kmh = 40.0;     // (0, 50]
  double corridor_halfwidth_m = 1.5;  // lateral half-width of the ego corridor
  int brake_distance_rows = 28;
  bool light_stop = true;
  double lookahead_near_m = 6.0;  // rows used for the road-centroid steering target
  double lookahead_far_m = 18.0;
  ViewGeometry geometry;  // range and fov; rows/cols are taken from the grid
};

/// Scripted stand-in for the driver who sees ground truth.
struct SafetyPolicyParams {
  double ttc_threshold_s = 1.5;
  int reaction_delay_ticks = 2;
  double corridor_halfwidth_m = 1.5;
  ViewGeometry geometry;
};

void validate(const SemanticPolicyParams& params);
void validate(const SafetyPolicyParams& params);

struct Hazard {
  int row = 0;
  int col = 0;
  double distance_m = 0.0;
  ClassId cls = ClassId::pedestrian;
};

bool in_corridor(const ViewGeometry& geometry, int row, int col, double halfwidth_m) noexcept;

/// Nearest pedestrian/vehicle cell inside the corridor, scanning rows near to far.
std::optional<Hazard> nearest_corridor_hazard(const SemanticGrid& grid, const ViewGeometry& geometry,
                                              double halfwidth_m) noexcept;

/// Seconds until the ego reaches `distance_m` at constant speed; +inf at rest.
double time_to_collision(double distance_m, double ego_speed_kmh) noexcept;

/// Pure-pursuit steering toward the road centroid, full brake for hazards
/// (and red lights, via the HUD phase) inside the brake zone, otherwise
/// throttle toward cruise speed without overshooting it on the next tick.
ControlCommand semantic_policy(const SemanticGrid& view, double ego_speed_kmh, const SemanticPolicyParams& params,
                               std::optional<LightPhase> light_phase = std::nullopt);

/// Full brake iff the nearest corridor hazard is under the TTC threshold and
/// the semantic driver is not already braking (pending brake < 0.5). The
/// reaction delay is applied by the session loop, not here.
ControlCommand safety_policy(const SemanticGrid& truth, double ego_speed_kmh, double pending_effective_brake,
                             const SafetyPolicyParams& params);

/// Headless stand-in for the operator's four-way label: a red-light overrun
/// wins, otherwise the ground-truth class of the hazard. `boredom` is never
/// produced here; only a human picks it.
InterventionCause auto_label(std::optional<ClassId> hazard_class, bool ran_red_light) noexcept;

}  // namespace aeye
