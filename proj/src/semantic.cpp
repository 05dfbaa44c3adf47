#include "aeye/semantic.hpp"

#include <algorithm>
#include <string>

#include "aeye/error.hpp"

namespace aeye {

namespace {

constexpr std::array<std::string_view, kNumClasses> kNames = {
    "void", "road", "sidewalk", "building", "vegetation", "vehicle", "pedestrian", "traffic_light",
};

constexpr std::array<Rgb, kNumClasses> kPalette = {{
    {0.00F, 0.00F, 0.00F},  // void
    {0.40F, 0.40F, 0.42F},  // road
    {0.62F, 0.60F, 0.58F},  // sidewalk
    {0.55F, 0.38F, 0.32F},  // building
    {0.30F, 0.52F, 0.25F},  // vegetation
    {0.22F, 0.28F, 0.58F},  // vehicle
    {0.66F, 0.44F, 0.40F},  // pedestrian
    {0.90F, 0.80F, 0.15F},  // traffic_light
}};

void check_shape(int rows, int cols) {
  if (rows <= 0 || cols <= 0) {
    throw InputError("grid shape must be positive, got " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

std::string_view class_name(ClassId c) noexcept { return kNames[index(c)]; }

std::optional<ClassId> class_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kNames[i] == name) return static_cast<ClassId>(i);
  }
  return std::nullopt;
}

Rgb palette_color(ClassId c) noexcept { return kPalette[index(c)]; }

SemanticGrid::SemanticGrid(int rows, int cols, ClassId fill) : rows_(rows), cols_(cols) {
  check_shape(rows, cols);
  cells_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
}

SemanticGrid::SemanticGrid(int rows, int cols, std::vector<ClassId> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
  check_shape(rows, cols);
  if (cells_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw InputError("grid has " + std::to_string(cells_.size()) + " cells, expected " +
                     std::to_string(rows * cols));
  }
  for (ClassId c : cells_) {
    if (!is_valid_class(static_cast<std::uint8_t>(c))) throw InputError("invalid class id in grid");
  }
}

SemanticGrid SemanticGrid::from_bytes(int rows, int cols, std::span<const std::uint8_t> bytes) {
  std::vector<ClassId> cells(bytes.size());
  std::transform(bytes.begin(), bytes.end(), cells.begin(), [](std::uint8_t b) { return static_cast<ClassId>(b); });
  return SemanticGrid(rows, cols, std::move(cells));
}

std::vector<std::uint8_t> SemanticGrid::bytes() const {
  std::vector<std::uint8_t> out(cells_.size());
  std::transform(cells_.begin(), cells_.end(), out.begin(), [](ClassId c) { return static_cast<std::uint8_t>(c); });
  return out;
}

std::size_t SemanticGrid::count(ClassId c) const noexcept {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), c));
}

AppearanceGrid::AppearanceGrid(int rows, int cols) : rows_(rows), cols_(cols) {
  check_shape(rows, cols);
  values_.assign(3 * size(), 0.0F);
}

AppearanceGrid::AppearanceGrid(int rows, int cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  check_shape(rows, cols);
  if (values_.size() != 3 * size()) throw InputError("appearance grid value count does not match shape");
  for (float& v : values_) {
    if (!(v >= 0.0F && v <= 1.0F)) throw InputError("appearance value outside [0,1]");
  }
}

void AppearanceGrid::set(int r, int c, Rgb v) noexcept {
  const std::size_t o = offset(r, c);
  values_[o] = std::clamp(v.r, 0.0F, 1.0F);
  values_[o + 1] = std::clamp(v.g, 0.0F, 1.0F);
  values_[o + 2] = std::clamp(v.b, 0.0F, 1.0F);
}

}  // namespace aeye
