#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "aeye/arbitration.hpp"
#include "aeye/rng.hpp"
#include "aeye/semantic.hpp"

namespace aeye {

inline constexpr double kTickSeconds = 0.1;
inline constexpr double kWheelbase = 2.5;
inline constexpr double kMaxSteerRad = 0.6;
inline constexpr double kMaxAccel = 3.0;        // m/s^2 at full throttle
inline constexpr double kMaxBrakeDecel = 8.0;   // m/s^2 at full brake
inline constexpr double kEgoLength = 4.5;
inline constexpr double kEgoWidth = 1.8;
inline constexpr double kRoadHalfWidth = 3.0;
inline constexpr double kSidewalkOuter = 6.0;
inline constexpr double kWalkerSize = 0.6;
inline constexpr double kVehicleLength = 4.5;
inline constexpr double kVehicleWidth = 1.8;
inline constexpr double kWalkerYieldMargin = 0.3;  // walkers stop short of the ego by this gap

constexpr double kmh_to_mps(double kmh) noexcept { return kmh / 3.6; }
constexpr double mps_to_kmh(double mps) noexcept { return mps * 3.6; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

enum class NpcKind : std::uint8_t { vehicle, walker };
enum class LightPhase : std::uint8_t { green, yellow, red };

std::string_view phase_name(LightPhase p) noexcept;
std::optional<LightPhase> phase_from_name(std::string_view name) noexcept;

struct EgoState {
  Vec2 position;
  double heading = 0.0;  // radians, 0 = +x (direction of travel)
  double speed = 0.0;    // m/s
  friend bool operator==(const EgoState&, const EgoState&) = default;
};

struct Npc {
  std::uint32_t id = 0;
  NpcKind kind = NpcKind::walker;
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;  // cruise speed along the plan, m/s
  double length = kWalkerSize;
  double width = kWalkerSize;
  std::vector<Vec2> plan;
  std::size_t next_waypoint = 0;
  std::uint64_t rng_state = 0;
  friend bool operator==(const Npc&, const Npc&) = default;
};

struct TrafficLight {
  Vec2 position;
  LightPhase phase = LightPhase::green;
  double phase_timer = 0.0;  // seconds spent in the current phase
  friend bool operator==(const TrafficLight&, const TrafficLight&) = default;
};

struct WorldState {
  std::uint64_t tick = 0;
  double clock = 0.0;
  EgoState ego;
  double odometer_km = 0.0;
  std::vector<Npc> npcs;
  std::vector<TrafficLight> lights;
  bool collision = false;
  bool ran_red_light = false;
  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct WorldConfig {
  std::uint64_t seed = 1;
  double map_extent = 400.0;  // side of the square map; the road is periodic along x
  int npc_vehicles = 4;
  int npc_walkers = 16;
  int npc_min = 8;   // allowed range for npc_vehicles + npc_walkers
  int npc_max = 24;
  double clouds = 10.0;
  double wind = 10.0;
  double sun_altitude = 60.0;
  double speed_limit_kmh = 50.0;
  double walker_cross_prob = 0.6;
  double light_spacing = 200.0;
  bool check_offroad = false;
  ViewGeometry view;
  double noise_sigma = 0.05;
};

/// Throws ConfigError naming the first out-of-range field.
void validate(const WorldConfig& config);

struct Rendering {
  SemanticGrid semantic;
  AppearanceGrid appearance;
};

struct LightAhead {
  double distance_m = 0.0;
  LightPhase phase = LightPhase::green;
};

/// Deterministic 2D driving world: a straight one-way road, periodic along x,
/// with sidewalks and alternating building/vegetation blocks on both sides.
class World {
 public:
  explicit World(WorldConfig config);

  const WorldConfig& config() const noexcept { return config_; }
  const ViewGeometry& geometry() const noexcept { return config_.view; }

  /// Initial state; a pure function of the config (seed included).
  WorldState init() const;

  /// Advances one tick. dt must lie in (0, 0.2].
  WorldState step(const WorldState& state, const ControlCommand& cmd, double dt = kTickSeconds) const;

  Rendering render(const WorldState& state) const;

  /// Nearest light ahead of the ego within view range, for the HUD.
  std::optional<LightAhead> light_ahead(const WorldState& state) const;

  ClassId ground_class(Vec2 p) const noexcept;
  /// Shortest periodic displacement from `from` to `to`.
  Vec2 displacement(Vec2 from, Vec2 to) const noexcept;
  double wrap_x(double x) const noexcept;

 private:
  Npc spawn_walker(std::uint32_t id, Rng& rng, double anchor_x, bool initial) const;
  Npc spawn_vehicle(std::uint32_t id, Rng& rng, double anchor_x, bool initial) const;
  bool near_ego(const EgoState& ego, Vec2 p, double size) const noexcept;
  void advance_npc(Npc& npc, const EgoState& ego, double dt) const;

  WorldConfig config_;
  double block_length_ = 25.0;
  std::vector<double> cell_distance_;
  std::vector<double> cell_lateral_;
};

}  // namespace aeye
