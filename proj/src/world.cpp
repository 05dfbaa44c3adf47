#include "aeye/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "aeye/error.hpp"

namespace aeye {

namespace {

constexpr std::uint64_t kLayoutStream = 0x4c41594f5554ULL;
constexpr std::uint64_t kNpcStream = 0x4e5043ULL;
constexpr std::uint64_t kLightStream = 0x4c49474854ULL;
constexpr std::uint64_t kAppearanceStream = 0x415050ULL;

constexpr std::array<double, 3> kPhaseSeconds = {12.0, 3.0, 8.0};  // green, yellow, red
constexpr std::array<std::string_view, 3> kPhaseNames = {"green", "yellow", "red"};

constexpr double kWalkerSidewalkY = 0.5 * (kRoadHalfWidth + kSidewalkOuter);
constexpr double kLightLateral = -(kRoadHalfWidth + 0.5);
constexpr double kLightPoleSize = 0.4;
constexpr double kSpawnClearance = 20.0;
constexpr double kVehicleFollowGap = 8.0;

struct Obb {
  Vec2 center;
  double heading;
  double half_length;
  double half_width;
};

// Separating-axis test for two oriented rectangles.
bool overlap(const Obb& a, const Obb& b) noexcept {
  const std::array<Vec2, 4> axes = {{
      {std::cos(a.heading), std::sin(a.heading)},
      {-std::sin(a.heading), std::cos(a.heading)},
      {std::cos(b.heading), std::sin(b.heading)},
      {-std::sin(b.heading), std::cos(b.heading)},
  }};
  const Vec2 d{b.center.x - a.center.x, b.center.y - a.center.y};
  auto radius = [](const Obb& o, Vec2 axis) {
    const double c = std::abs(std::cos(o.heading) * axis.x + std::sin(o.heading) * axis.y);
    const double s = std::abs(-std::sin(o.heading) * axis.x + std::cos(o.heading) * axis.y);
    return o.half_length * c + o.half_width * s;
  };
  for (const Vec2& axis : axes) {
    const double dist = std::abs(d.x * axis.x + d.y * axis.y);
    if (dist > radius(a, axis) + radius(b, axis)) return false;
  }
  return true;
}

void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

double phase_duration(LightPhase p) noexcept { return kPhaseSeconds[static_cast<std::size_t>(p)]; }

LightPhase next_phase(LightPhase p) noexcept {
  switch (p) {
    case LightPhase::green:
      return LightPhase::yellow;
    case LightPhase::yellow:
      return LightPhase::red;
    case LightPhase::red:
      return LightPhase::green;
  }
  return LightPhase::green;
}

}  // namespace

std::string_view phase_name(LightPhase p) noexcept { return kPhaseNames[static_cast<std::size_t>(p)]; }

std::optional<LightPhase> phase_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i) {
    if (kPhaseNames[i] == name) return static_cast<LightPhase>(i);
  }
  return std::nullopt;
}

void validate(const WorldConfig& c) {
  require(std::isfinite(c.map_extent) && c.map_extent >= 2.0 * c.view.range_m + 100.0, "map_extent",
          "must be at least twice the view range plus 100 m");
  require(c.npc_vehicles >= 0, "npc_vehicles", "must be non-negative");
  require(c.npc_walkers >= 0, "npc_walkers", "must be non-negative");
  require(c.npc_min >= 0 && c.npc_min <= c.npc_max, "npc_min", "must satisfy 0 <= npc_min <= npc_max");
  const int total = c.npc_vehicles + c.npc_walkers;
  require(total >= c.npc_min && total <= c.npc_max, "npc_walkers",
          "npc total " + std::to_string(total) + " outside [" + std::to_string(c.npc_min) + ", " +
              std::to_string(c.npc_max) + "]");
  require(c.clouds >= 0.0 && c.clouds <= 30.0, "clouds", "must lie in [0, 30]");
  require(c.wind >= 0.0 && c.wind <= 50.0, "wind", "must lie in [0, 50]");
  require(c.sun_altitude >= 20.0 && c.sun_altitude <= 90.0, "sun_altitude", "must lie in [20, 90]");
  require(std::isfinite(c.speed_limit_kmh) && c.speed_limit_kmh > 0.0, "speed_limit", "must be positive");
  require(c.walker_cross_prob >= 0.0 && c.walker_cross_prob <= 1.0, "walker_cross_prob", "must lie in [0, 1]");
  require(std::isfinite(c.light_spacing) && c.light_spacing >= 50.0, "light_spacing", "must be at least 50 m");
  require(c.view.rows >= 4 && c.view.cols >= 4, "grid_rows", "rows and cols must be at least 4");
  require(c.view.range_m > 0.0 && std::isfinite(c.view.range_m), "view_range", "must be positive");
  require(c.view.fov_rad > 0.0 && c.view.fov_rad < std::numbers::pi, "fov_deg", "must lie in (0, 180) degrees");
  require(c.noise_sigma >= 0.0 && c.noise_sigma <= 0.5, "noise_sigma", "must lie in [0, 0.5]");
}

World::World(WorldConfig config) : config_(std::move(config)) {
  validate(config_);
  block_length_ = config_.map_extent / std::max(1.0, std::round(config_.map_extent / 25.0));
  const ViewGeometry& g = config_.view;
  cell_distance_.resize(static_cast<std::size_t>(g.rows) * static_cast<std::size_t>(g.cols));
  cell_lateral_.resize(cell_distance_.size());
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const auto o = static_cast<std::size_t>(r * g.cols + c);
      cell_distance_[o] = g.row_distance(r);
      cell_lateral_[o] = g.lateral(r, c);
    }
  }
}

double World::wrap_x(double x) const noexcept {
  const double e = config_.map_extent;
  double w = std::fmod(x, e);
  if (w < 0.0) w += e;
  if (w >= e) w = 0.0;
  return w;
}

Vec2 World::displacement(Vec2 from, Vec2 to) const noexcept {
  const double e = config_.map_extent;
  double dx = std::fmod(to.x - from.x, e);
  if (dx > 0.5 * e) dx -= e;
  if (dx < -0.5 * e) dx += e;
  return {dx, to.y - from.y};
}

ClassId World::ground_class(Vec2 p) const noexcept {
  const double ay = std::abs(p.y);
  if (ay <= kRoadHalfWidth) return ClassId::road;
  if (ay <= kSidewalkOuter) return ClassId::sidewalk;
  if (ay > 0.5 * config_.map_extent) return ClassId::void_;
  const auto block = static_cast<std::uint64_t>(std::floor(wrap_x(p.x) / block_length_));
  const std::uint64_t side = p.y > 0.0 ? 1 : 0;
  const std::uint64_t h = derive_seed(derive_seed(config_.seed, kLayoutStream), block * 2 + side);
  return (h % 5) < 3 ? ClassId::building : ClassId::vegetation;
}

Npc World::spawn_walker(std::uint32_t id, Rng& rng, double anchor_x, bool initial) const {
  Npc w;
  w.id = id;
  w.kind = NpcKind::walker;
  w.length = kWalkerSize;
  w.width = kWalkerSize;
  w.speed = rng.uniform(1.0, 1.8);
  const double range = config_.view.range_m;
  const double x0 = initial ? anchor_x + rng.uniform(kSpawnClearance, config_.map_extent - kSpawnClearance)
                            : anchor_x + rng.uniform(range + 5.0, range + 150.0);
  const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double dir = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double walk1 = rng.uniform(5.0, 40.0);
  const double walk2 = rng.uniform(5.0, 30.0);
  const bool cross = rng.bernoulli(config_.walker_cross_prob);
  const double y = side * kWalkerSidewalkY;
  w.position = {wrap_x(x0), y};
  const double xc = x0 + dir * walk1;
  if (cross) {
    w.plan = {{wrap_x(xc), y}, {wrap_x(xc), -y}, {wrap_x(xc + dir * walk2), -y}};
  } else {
    w.plan = {{wrap_x(xc + dir * walk2), y}};
  }
  w.heading = dir > 0.0 ? 0.0 : std::numbers::pi;
  w.next_waypoint = 0;
  return w;
}

Npc World::spawn_vehicle(std::uint32_t id, Rng& rng, double anchor_x, bool initial) const {
  Npc v;
  v.id = id;
  v.kind = NpcKind::vehicle;
  v.length = kVehicleLength;
  v.width = kVehicleWidth;
  v.speed = kmh_to_mps(config_.speed_limit_kmh) * rng.uniform(0.4, 1.0);
  const double range = config_.view.range_m;
  const double x0 = initial ? anchor_x + rng.uniform(kSpawnClearance, config_.map_extent - kSpawnClearance)
                            : anchor_x + rng.uniform(range + 10.0, config_.map_extent - 30.0);
  v.position = {wrap_x(x0), 0.0};
  v.heading = 0.0;
  // Plans stay under half the extent so the periodic shortest path points forward.
  v.plan = {{wrap_x(x0 + rng.uniform(80.0, std::min(250.0, 0.45 * config_.map_extent))), 0.0}};
  v.next_waypoint = 0;
  return v;
}

WorldState World::init() const {
  WorldState s;
  s.ego.position = {0.0, 0.0};
  std::uint32_t id = 0;
  for (int i = 0; i < config_.npc_vehicles; ++i, ++id) {
    Rng rng(derive_seed(derive_seed(config_.seed, kNpcStream), id));
    Npc npc = spawn_vehicle(id, rng, 0.0, true);
    npc.rng_state = rng.state();
    s.npcs.push_back(std::move(npc));
  }
  for (int i = 0; i < config_.npc_walkers; ++i, ++id) {
    Rng rng(derive_seed(derive_seed(config_.seed, kNpcStream), id));
    Npc npc = spawn_walker(id, rng, 0.0, true);
    npc.rng_state = rng.state();
    s.npcs.push_back(std::move(npc));
  }
  Rng light_rng(derive_seed(config_.seed, kLightStream));
  const int n_lights = std::max(1, static_cast<int>(config_.map_extent / config_.light_spacing));
  const double spacing = config_.map_extent / n_lights;
  for (int i = 0; i < n_lights; ++i) {
    TrafficLight light;
    light.position = {wrap_x(0.5 * spacing + i * spacing), kLightLateral};
    light.phase = static_cast<LightPhase>(light_rng.below(3));
    light.phase_timer = light_rng.uniform(0.0, phase_duration(light.phase));
    s.lights.push_back(light);
  }
  return s;
}

bool World::near_ego(const EgoState& ego, Vec2 p, double size) const noexcept {
  const Vec2 d = displacement(ego.position, p);
  const double c = std::cos(ego.heading);
  const double sn = std::sin(ego.heading);
  const double along = d.x * c + d.y * sn;
  const double across = -d.x * sn + d.y * c;
  const double margin = kWalkerYieldMargin + 0.5 * size;
  return std::abs(along) < 0.5 * kEgoLength + margin && std::abs(across) < 0.5 * kEgoWidth + margin;
}

void World::advance_npc(Npc& npc, const EgoState& ego, double dt) const {
  double budget = npc.speed * dt;
  if (npc.kind == NpcKind::vehicle) {
    // Vehicles hold position while the ego sits just ahead of them in the lane.
    const Vec2 d = displacement(npc.position, ego.position);
    if (d.x > 0.0 && d.x < kVehicleFollowGap + kVehicleLength && std::abs(d.y) < kRoadHalfWidth) budget = 0.0;
  } else if (npc.next_waypoint < npc.plan.size()) {
    // Walkers wait rather than step into the ego's footprint.
    const Vec2 to = displacement(npc.position, npc.plan[npc.next_waypoint]);
    const double dist = std::hypot(to.x, to.y);
    const double s = dist > 0.0 ? std::min(budget, dist) / dist : 0.0;
    if (near_ego(ego, {npc.position.x + to.x * s, npc.position.y + to.y * s}, npc.width) &&
        !near_ego(ego, npc.position, npc.width)) {
      budget = 0.0;
    }
  }
  while (budget > 0.0 && npc.next_waypoint < npc.plan.size()) {
    const Vec2 target = npc.plan[npc.next_waypoint];
    const Vec2 d = displacement(npc.position, target);
    const double dist = std::hypot(d.x, d.y);
    if (dist > 1e-12) npc.heading = std::atan2(d.y, d.x);
    if (dist <= budget) {
      npc.position = target;
      budget -= dist;
      ++npc.next_waypoint;
    } else {
      npc.position = {wrap_x(npc.position.x + d.x / dist * budget), npc.position.y + d.y / dist * budget};
      budget = 0.0;
    }
  }
  if (npc.next_waypoint >= npc.plan.size()) {
    Rng rng(npc.rng_state);
    npc = npc.kind == NpcKind::walker ? spawn_walker(npc.id, rng, ego.position.x, false)
                                      : spawn_vehicle(npc.id, rng, ego.position.x, false);
    npc.rng_state = rng.state();
  }
}

WorldState World::step(const WorldState& state, const ControlCommand& cmd, double dt) const {
  if (!is_finite(cmd)) throw InputError("step: non-finite control command");
  if (!in_range(cmd)) throw InputError("step: control command out of range");
  if (!(dt > 0.0 && dt <= 0.2)) throw InputError("step: dt must lie in (0, 0.2]");

  WorldState next = state;
  EgoState& ego = next.ego;
  const double vmax = kmh_to_mps(config_.speed_limit_kmh);
  const double accel = cmd.throttle * kMaxAccel - cmd.brake * kMaxBrakeDecel;
  ego.speed = std::clamp(state.ego.speed + accel * dt, 0.0, vmax);
  const double travelled = ego.speed * dt;
  const double prev_x = state.ego.position.x;
  ego.position.x = wrap_x(state.ego.position.x + travelled * std::cos(state.ego.heading));
  ego.position.y = std::clamp(state.ego.position.y + travelled * std::sin(state.ego.heading),
                              -0.5 * config_.map_extent, 0.5 * config_.map_extent);
  ego.heading = std::remainder(
      state.ego.heading + ego.speed / kWheelbase * std::tan(cmd.steer * kMaxSteerRad) * dt, 2.0 * std::numbers::pi);
  next.odometer_km = state.odometer_km + travelled / 1000.0;

  for (Npc& npc : next.npcs) advance_npc(npc, ego, dt);

  next.ran_red_light = false;
  for (TrafficLight& light : next.lights) {
    const double dx_before = displacement({prev_x, 0.0}, light.position).x;
    const double dx_after = displacement(ego.position, light.position).x;
    if (light.phase == LightPhase::red && dx_before > 0.0 && dx_after <= 0.0 && dx_before < 10.0) {
      next.ran_red_light = true;
    }
    light.phase_timer += dt;
    while (light.phase_timer >= phase_duration(light.phase)) {
      light.phase_timer -= phase_duration(light.phase);
      light.phase = next_phase(light.phase);
    }
  }

  const Obb ego_box{ego.position, ego.heading, 0.5 * kEgoLength, 0.5 * kEgoWidth};
  bool hit = false;
  for (const Npc& npc : next.npcs) {
    const Vec2 d = displacement(ego.position, npc.position);
    if (std::abs(d.x) > 10.0 || std::abs(d.y) > 10.0) continue;
    const Obb npc_box{{ego.position.x + d.x, ego.position.y + d.y}, npc.heading, 0.5 * npc.length, 0.5 * npc.width};
    if (overlap(ego_box, npc_box)) {
      hit = true;
      break;
    }
  }
  if (!hit && config_.check_offroad) {
    const double c = std::cos(ego.heading);
    const double s = std::sin(ego.heading);
    for (double fl : {-0.5 * kEgoLength, 0.5 * kEgoLength}) {
      for (double fw : {-0.5 * kEgoWidth, 0.5 * kEgoWidth}) {
        if (std::abs(ego.position.y + fl * s + fw * c) > kRoadHalfWidth) hit = true;
      }
    }
  }
  next.collision = hit;
  if (hit) ego.speed = 0.0;

  next.tick = state.tick + 1;
  next.clock = state.clock + dt;
  return next;
}

namespace {

struct Placed {
  ClassId cls;
  double forward;
  double lateral;
  double depth;
  double width;
  std::uint32_t order;
};

}  // namespace

Rendering World::render(const WorldState& state) const {
  const ViewGeometry& g = config_.view;
  SemanticGrid sem(g.rows, g.cols);
  const EgoState& ego = state.ego;
  const double ch = std::cos(ego.heading);
  const double sh = std::sin(ego.heading);
  // The view starts at the front bumper, so row distances are gaps ahead of the car.
  const Vec2 origin{ego.position.x + 0.5 * kEgoLength * ch, ego.position.y + 0.5 * kEgoLength * sh};

  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const auto o = static_cast<std::size_t>(r * g.cols + c);
      const double d = cell_distance_[o];
      const double lat = cell_lateral_[o];
      const Vec2 p{origin.x + d * ch - lat * sh, origin.y + d * sh + lat * ch};
      sem.set(r, c, ground_class(p));
    }
  }

  std::vector<Placed> objects;
  auto place = [&](ClassId cls, Vec2 pos, double heading, double length, double width, std::uint32_t order) {
    const Vec2 d = displacement(origin, pos);
    const double fwd = d.x * ch + d.y * sh;
    const double lat = -d.x * sh + d.y * ch;
    const double rel = heading - ego.heading;
    const double depth = std::abs(length * std::cos(rel)) + std::abs(width * std::sin(rel));
    const double span = std::abs(length * std::sin(rel)) + std::abs(width * std::cos(rel));
    if (fwd + 0.5 * depth <= 0.0 || fwd - 0.5 * depth >= g.range_m) return;
    objects.push_back({cls, fwd, lat, depth, span, order});
  };
  std::uint32_t order = 0;
  for (const TrafficLight& light : state.lights) {
    place(ClassId::traffic_light, light.position, 0.0, kLightPoleSize, kLightPoleSize, order++);
  }
  for (const Npc& npc : state.npcs) {
    place(npc.kind == NpcKind::walker ? ClassId::pedestrian : ClassId::vehicle, npc.position, npc.heading, npc.length,
          npc.width, order++);
  }
  // Painter's order: far objects first so nearer ones overwrite them.
  std::sort(objects.begin(), objects.end(), [](const Placed& a, const Placed& b) {
    if (a.forward != b.forward) return a.forward > b.forward;
    return a.order < b.order;
  });

  const double row_depth = g.row_depth();
  const double col_angle = g.col_angle();
  for (const Placed& obj : objects) {
    const double bearing = std::atan2(obj.lateral, obj.forward);
    const double range = std::hypot(obj.forward, obj.lateral);
    const double half_angle = std::atan(0.5 * obj.width / std::max(range, 1e-6));
    if (std::abs(bearing) - half_angle > 0.5 * g.fov_rad) continue;

    const int n_rows = std::max(1, static_cast<int>(std::lround(obj.depth / row_depth)));
    const int r0 = static_cast<int>(std::floor((obj.forward - 0.5 * obj.depth) / row_depth));
    const int n_cols = std::max(1, static_cast<int>(std::lround(2.0 * half_angle / col_angle)));
    const auto c_center = static_cast<int>(std::lround((0.5 * g.fov_rad - bearing) / col_angle - 0.5));
    const int c0 = c_center - (n_cols - 1) / 2;
    for (int r = std::max(0, r0); r < std::min(g.rows, r0 + n_rows); ++r) {
      for (int c = std::max(0, c0); c < std::min(g.cols, c0 + n_cols); ++c) sem.set(r, c, obj.cls);
    }
  }

  AppearanceGrid app(g.rows, g.cols);
  const double brightness = 0.55 + 0.45 * std::sin(config_.sun_altitude * std::numbers::pi / 180.0);
  const double sigma = config_.noise_sigma * (1.0 + config_.clouds / 100.0);
  const double leaf_sigma = config_.noise_sigma * config_.wind / 100.0;
  Rng rng(derive_seed(derive_seed(config_.seed, kAppearanceStream), state.tick));
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const ClassId cls = sem.at(r, c);
      const Rgb base = palette_color(cls);
      const double s = cls == ClassId::vegetation ? sigma + leaf_sigma : sigma;
      const auto channel = [&](float v) { return static_cast<float>(v * brightness + s * rng.normal()); };
      const float red = channel(base.r);
      const float green = channel(base.g);
      const float blue = channel(base.b);
      app.set(r, c, {red, green, blue});
    }
  }
  return {std::move(sem), std::move(app)};
}

std::optional<LightAhead> World::light_ahead(const WorldState& state) const {
  std::optional<LightAhead> best;
  const double ch = std::cos(state.ego.heading);
  const double sh = std::sin(state.ego.heading);
  for (const TrafficLight& light : state.lights) {
    const Vec2 d = displacement(state.ego.position, light.position);
    const double fwd = d.x * ch + d.y * sh;
    if (fwd <= 0.0 || fwd > config_.view.range_m) continue;
    if (!best || fwd < best->distance_m) best = LightAhead{fwd, light.phase};
  }
  return best;
}

}  // namespace aeye
