#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <string>
#include <vector>

#include "aeye/arbitration.hpp"
#include "aeye/semantic.hpp"

namespace aeye {

struct FrameRecord {
  std::uint64_t tick_index = 0;
  double timestamp = 0.0;
  SemanticGrid truth;
  SemanticGrid predicted;
  AppearanceGrid appearance;
  double ego_speed_kmh = 0.0;
  ControlCommand effective_cmd;
  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct CaptureSettings {
  int seconds = 3;
  int fps = 10;
  std::size_t capacity() const noexcept { return static_cast<std::size_t>(seconds) * static_cast<std::size_t>(fps); }
};

/// Fixed-capacity FIFO of the most recent frames.
class RollingBuffer {
 public:
  explicit RollingBuffer(std::size_t capacity = CaptureSettings{}.capacity());

  /// Appends, evicting the oldest entry once capacity is exceeded. Throws
  /// SequencingError unless tick_index is greater than the newest entry's.
  void push(FrameRecord frame);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool full() const noexcept { return entries_.size() == capacity_; }
  bool empty() const noexcept { return entries_.empty(); }
  void clear() noexcept;
  const std::deque<FrameRecord>& entries() const noexcept { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<FrameRecord> entries_;
  bool has_last_ = false;
  std::uint64_t last_tick_ = 0;
};

struct CornerCaseRecord {
  std::string id;
  std::vector<FrameRecord> frames;
  InterventionEvent event;
  double km_driven_at_event = 0.0;
  double ride_duration_min = 0.0;
  int fps = 10;
  friend bool operator==(const CornerCaseRecord&, const CornerCaseRecord&) = default;
};

/// Copies a full buffer into a record and clears the buffer. Throws
/// CaptureError when the buffer is not yet full.
CornerCaseRecord snapshot(RollingBuffer& buffer, const InterventionEvent& event, std::string id, int fps = 10);

/// Writes `<root>/<id>/` and adds the id to `<root>/manifest.json`.
/// Throws StorageError if the id already exists under root.
void persist(const CornerCaseRecord& record, const std::filesystem::path& root);

/// Throws FormatError naming the offending file on malformed content.
CornerCaseRecord load(const std::filesystem::path& root, const std::string& id);

/// Ids listed in `<root>/manifest.json`, in persistence order.
std::vector<std::string> list_records(const std::filesystem::path& root);

// Frame file codecs shared with dataset storage.
std::string encode_pgm(const SemanticGrid& grid);
SemanticGrid decode_pgm(std::string_view bytes, const std::string& source);
std::string encode_appearance(const AppearanceGrid& grid);
AppearanceGrid decode_appearance(std::string_view bytes, int rows, int cols, const std::string& source);

}  // namespace aeye
