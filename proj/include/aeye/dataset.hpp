#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aeye/semantic.hpp"

namespace aeye {

enum class FrameOrigin : std::uint8_t { base, corner_case };

std::string_view origin_name(FrameOrigin o) noexcept;

/// One training/test frame: the appearance the perceiver sees and its labels.
struct FrameSample {
  AppearanceGrid appearance;
  SemanticGrid label;
  FrameOrigin origin = FrameOrigin::base;
  std::string scene_id;
  friend bool operator==(const FrameSample&, const FrameSample&) = default;
};

struct Scene {
  std::string scene_id;
  std::vector<FrameSample> frames;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct DatasetMeta {
  std::string name;
  std::uint64_t seed = 0;
  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Scene> scenes;

  std::size_t frame_count() const noexcept;
  std::size_t frame_count(FrameOrigin origin) const noexcept;
  bool empty() const noexcept { return frame_count() == 0; }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace aeye
