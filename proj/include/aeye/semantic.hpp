#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace aeye {

enum class ClassId : std::uint8_t {
  void_ = 0,
  road = 1,
  sidewalk = 2,
  building = 3,
  vegetation = 4,
  vehicle = 5,
  pedestrian = 6,
  traffic_light = 7,
};

inline constexpr std::size_t kNumClasses = 8;

constexpr std::size_t index(ClassId c) noexcept { return static_cast<std::size_t>(c); }
constexpr bool is_valid_class(std::uint8_t id) noexcept { return id < kNumClasses; }

std::string_view class_name(ClassId c) noexcept;
std::optional<ClassId> class_from_name(std::string_view name) noexcept;

/// Movable road users; the hazards both drivers react to.
constexpr bool is_hazard(ClassId c) noexcept {
  return c == ClassId::pedestrian || c == ClassId::vehicle;
}

/// Object classes rendered on top of the ground layer.
constexpr bool is_object(ClassId c) noexcept {
  return is_hazard(c) || c == ClassId::traffic_light;
}

struct Rgb {
  float r = 0.0F;
  float g = 0.0F;
  float b = 0.0F;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Fixed per-class color used by the appearance renderer and the UI.
Rgb palette_color(ClassId c) noexcept;

/// Row-major grid of class ids. Row 0 is nearest to the ego vehicle.
class SemanticGrid {
 public:
  SemanticGrid() = default;
  SemanticGrid(int rows, int cols, ClassId fill = ClassId::void_);
  SemanticGrid(int rows, int cols, std::vector<ClassId> cells);

  /// Builds from raw bytes; throws InputError on a size mismatch or an id >= 8.
  static SemanticGrid from_bytes(int rows, int cols, std::span<const std::uint8_t> bytes);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool empty() const noexcept { return cells_.empty(); }
  bool contains(int r, int c) const noexcept { return r >= 0 && c >= 0 && r < rows_ && c < cols_; }

  ClassId at(int r, int c) const noexcept { return cells_[offset(r, c)]; }
  void set(int r, int c, ClassId v) noexcept { cells_[offset(r, c)] = v; }

  std::span<const ClassId> cells() const noexcept { return cells_; }
  std::span<ClassId> cells() noexcept { return cells_; }

  std::vector<std::uint8_t> bytes() const;
  std::size_t count(ClassId c) const noexcept;

  friend bool operator==(const SemanticGrid&, const SemanticGrid&) = default;

 private:
  std::size_t offset(int r, int c) const noexcept {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<ClassId> cells_;
};

/// Per-cell RGB-like feature triple in [0,1], stored as 32-bit floats.
class AppearanceGrid {
 public:
  AppearanceGrid() = default;
  AppearanceGrid(int rows, int cols);
  AppearanceGrid(int rows, int cols, std::vector<float> values);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_); }
  bool contains(int r, int c) const noexcept { return r >= 0 && c >= 0 && r < rows_ && c < cols_; }

  Rgb at(int r, int c) const noexcept {
    const std::size_t o = offset(r, c);
    return {values_[o], values_[o + 1], values_[o + 2]};
  }
  /// Stores the triple clamped to [0,1].
  void set(int r, int c, Rgb v) noexcept;

  std::span<const float> values() const noexcept { return values_; }

  friend bool operator==(const AppearanceGrid&, const AppearanceGrid&) = default;

 private:
  std::size_t offset(int r, int c) const noexcept {
    return 3 * (static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c));
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<float> values_;
};

/// Geometry of the ego-centric forward view.
///
/// Rows are ground-distance bins, linear in meters: row r covers
/// [r, r+1) * range_m / rows and is represented by its center. Columns are
/// bearing bins spanning the horizontal field of view, column 0 leftmost.
/// Because columns are angular, a fixed-width object covers fewer columns
/// the farther away it is.
struct ViewGeometry {
  int rows = 64;
  int cols = 64;
  double range_m = 50.0;
  double fov_rad = std::numbers::pi / 2.0;

  double row_depth() const noexcept { return range_m / rows; }
  double row_distance(int r) const noexcept { return (r + 0.5) * row_depth(); }
  double col_angle() const noexcept { return fov_rad / cols; }
  /// Positive bearings are to the left of the ego heading.
  double col_bearing(int c) const noexcept { return 0.5 * fov_rad - (c + 0.5) * col_angle(); }
  /// Lateral offset in meters of the ground point at the cell center; left positive.
  double lateral(int r, int c) const noexcept { return row_distance(r) * std::tan(col_bearing(c)); }

  friend bool operator==(const ViewGeometry&, const ViewGeometry&) = default;
};

}  // namespace aeye
