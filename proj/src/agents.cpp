#include "aeye/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aeye/error.hpp"

namespace aeye {

namespace {

ViewGeometry geometry_for(const SemanticGrid& grid, ViewGeometry g) noexcept {
  g.rows = grid.rows();
  g.cols = grid.cols();
  return g;
}

}  // namespace

void validate(const SemanticPolicyParams& p) {
  if (!(p.cruise_speed_kmh > 0.0 && p.cruise_speed_kmh <= 50.0)) {
    throw ConfigError("cruise_speed", "must lie in (0, 50] km/h");
  }
  const double max_lateral = p.geometry.range_m * std::tan(0.5 * p.geometry.fov_rad);
  if (!(p.corridor_halfwidth_m > 0.0 && p.corridor_halfwidth_m < max_lateral)) {
    throw ConfigError("corridor_halfwidth_m", "must be positive and inside the view");
  }
  if (p.brake_distance_rows < 0) throw ConfigError("brake_distance_rows", "must be non-negative");
  if (!(p.lookahead_near_m >= 0.0 && p.lookahead_far_m > p.lookahead_near_m)) {
    throw ConfigError("lookahead_far_m", "need 0 <= lookahead_near_m < lookahead_far_m");
  }
}

void validate(const SafetyPolicyParams& p) {
  if (!(p.ttc_threshold_s > 0.0)) throw ConfigError("ttc_threshold", "must be positive");
  if (p.reaction_delay_ticks < 0) throw ConfigError("reaction_delay", "must be non-negative");
  if (!(p.corridor_halfwidth_m > 0.0)) throw ConfigError("corridor_halfwidth_m", "must be positive");
}

bool in_corridor(const ViewGeometry& geometry, int row, int col, double halfwidth_m) noexcept {
  return std::abs(geometry.lateral(row, col)) <= halfwidth_m;
}

std::optional<Hazard> nearest_corridor_hazard(const SemanticGrid& grid, const ViewGeometry& geometry,
                                              double halfwidth_m) noexcept {
  const ViewGeometry g = geometry_for(grid, geometry);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const ClassId cls = grid.at(r, c);
      if (is_hazard(cls) && in_corridor(g, r, c, halfwidth_m)) return Hazard{r, c, g.row_distance(r), cls};
    }
  }
  return std::nullopt;
}

double time_to_collision(double distance_m, double ego_speed_kmh) noexcept {
  const double v = kmh_to_mps(ego_speed_kmh);
  if (v <= 0.0) return std::numeric_limits<double>::infinity();
  return distance_m / v;
}

ControlCommand semantic_policy(const SemanticGrid& view, double ego_speed_kmh, const SemanticPolicyParams& params,
                               std::optional<LightPhase> light_phase) {
  const ViewGeometry g = geometry_for(view, params.geometry);

  double lateral_sum = 0.0;
  double distance_sum = 0.0;
  int rows_used = 0;
  for (int r = 0; r < g.rows; ++r) {
    const double d = g.row_distance(r);
    if (d < params.lookahead_near_m || d > params.lookahead_far_m) continue;
    double row_sum = 0.0;
    int n = 0;
    for (int c = 0; c < g.cols; ++c) {
      if (view.at(r, c) == ClassId::road) {
        row_sum += g.lateral(r, c);
        ++n;
      }
    }
    if (n == 0) continue;
    lateral_sum += row_sum / n;
    distance_sum += d;
    ++rows_used;
  }
  ControlCommand cmd;
  if (rows_used > 0) {
    const double lat = lateral_sum / rows_used;
    const double d = distance_sum / rows_used;
    const double curvature = 2.0 * lat / (d * d + lat * lat);
    cmd.steer = std::clamp(std::atan(curvature * kWheelbase) / kMaxSteerRad, -1.0, 1.0);
  }

  const int brake_rows = std::min(params.brake_distance_rows, g.rows);
  bool stop = false;
  for (int r = 0; r < brake_rows && !stop; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const ClassId cls = view.at(r, c);
      if ((is_hazard(cls) && in_corridor(g, r, c, params.corridor_halfwidth_m)) ||
          (params.light_stop && light_phase == LightPhase::red && cls == ClassId::traffic_light)) {
        stop = true;
        break;
      }
    }
  }
  if (stop) {
    cmd.brake = 1.0;
    return cmd;
  }

  const double v = kmh_to_mps(ego_speed_kmh);
  const double target = kmh_to_mps(std::min(params.cruise_speed_kmh, 50.0));
  if (v < target) cmd.throttle = std::clamp((target - v) / (kMaxAccel * kTickSeconds), 0.0, 1.0);
  return cmd;
}

ControlCommand safety_policy(const SemanticGrid& truth, double ego_speed_kmh, double pending_effective_brake,
                             const SafetyPolicyParams& params) {
  const auto hazard = nearest_corridor_hazard(truth, params.geometry, params.corridor_halfwidth_m);
  if (!hazard) return {};
  if (time_to_collision(hazard->distance_m, ego_speed_kmh) < params.ttc_threshold_s && pending_effective_brake < 0.5) {
    return {0.0, 0.0, 1.0};
  }
  return {};
}

InterventionCause auto_label(std::optional<ClassId> hazard_class, bool ran_red_light) noexcept {
  if (ran_red_light) return InterventionCause::traffic_rule_violation;
  if (hazard_class == ClassId::pedestrian) return InterventionCause::overlooked_walker;
  if (hazard_class == ClassId::vehicle) return InterventionCause::overlooked_vehicle;
  return InterventionCause::traffic_rule_violation;
}

}  // namespace aeye
