#include "aeye/capture.hpp"

#include <cstdio>
#include <mutex>
#include <string>

#include "aeye/error.hpp"
#include "byte_io.hpp"
#include "json_codec.hpp"

namespace aeye {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kRecordFormat = "aeye-cc/1";
constexpr const char* kIndexFormat = "aeye-cc-index/1";

std::mutex& index_mutex() {
  static std::mutex m;
  return m;
}

std::string frame_stem(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return buf;
}

json read_json(const fs::path& path) {
  const std::string text = detail::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(path.string(), e.what());
  }
}

}  // namespace

RollingBuffer::RollingBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InputError("rolling buffer capacity must be positive");
}

void RollingBuffer::push(FrameRecord frame) {
  if (has_last_ && frame.tick_index <= last_tick_) {
    throw SequencingError("frame tick " + std::to_string(frame.tick_index) + " does not follow tick " +
                          std::to_string(last_tick_));
  }
  has_last_ = true;
  last_tick_ = frame.tick_index;
  entries_.push_back(std::move(frame));
  if (entries_.size() > capacity_) entries_.pop_front();
}

void RollingBuffer::clear() noexcept { entries_.clear(); }

CornerCaseRecord snapshot(RollingBuffer& buffer, const InterventionEvent& event, std::string id, int fps) {
  if (!buffer.full()) {
    throw CaptureError("buffer holds " + std::to_string(buffer.size()) + " of " + std::to_string(buffer.capacity()) +
                       " frames");
  }
  CornerCaseRecord record;
  record.id = std::move(id);
  record.frames.assign(buffer.entries().begin(), buffer.entries().end());
  record.event = event;
  record.km_driven_at_event = event.odometer_km;
  record.ride_duration_min = event.timestamp / 60.0;
  record.fps = fps;
  buffer.clear();
  return record;
}

std::string encode_pgm(const SemanticGrid& grid) {
  std::string out = "P5\n" + std::to_string(grid.cols()) + " " + std::to_string(grid.rows()) + "\n255\n";
  const auto bytes = grid.bytes();
  out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  return out;
}

SemanticGrid decode_pgm(std::string_view bytes, const std::string& source) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  };
  auto read_int = [&]() -> long {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw FormatError(source, "malformed PGM header");
    return std::stol(std::string(bytes.substr(start, pos - start)));
  };
  if (bytes.substr(0, 2) != "P5") throw FormatError(source, "not a binary PGM");
  pos = 2;
  const long cols = read_int();
  const long rows = read_int();
  const long maxval = read_int();
  if (cols <= 0 || rows <= 0 || cols > 4096 || rows > 4096 || maxval != 255) {
    throw FormatError(source, "unsupported PGM dimensions");
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError(source, "truncated PGM header");
  }
  ++pos;
  const auto n = static_cast<std::size_t>(rows * cols);
  if (bytes.size() - pos != n) {
    throw FormatError(source, "expected " + std::to_string(n) + " cell bytes, found " + std::to_string(bytes.size() - pos));
  }
  const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data() + pos);
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_valid_class(data[i])) throw FormatError(source, "cell value is not a class id");
  }
  return SemanticGrid::from_bytes(static_cast<int>(rows), static_cast<int>(cols), {data, n});
}

std::string encode_appearance(const AppearanceGrid& grid) {
  std::string out;
  out.reserve(grid.values().size() * 4);
  for (float v : grid.values()) detail::put_le<float>(out, v);
  return out;
}

AppearanceGrid decode_appearance(std::string_view bytes, int rows, int cols, const std::string& source) {
  const std::size_t n = 3 * static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (bytes.size() != 4 * n) {
    throw FormatError(source, "expected " + std::to_string(4 * n) + " bytes, found " + std::to_string(bytes.size()));
  }
  std::vector<float> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = detail::get_le<float>(bytes, 4 * i);
  try {
    return AppearanceGrid(rows, cols, std::move(values));
  } catch (const InputError& e) {
    throw FormatError(source, e.what());
  }
}

void persist(const CornerCaseRecord& record, const fs::path& root) {
  if (record.id.empty() || record.id.find('/') != std::string::npos || record.id == "." || record.id == "..") {
    throw StorageError("invalid record id '" + record.id + "'");
  }
  if (record.frames.empty()) throw StorageError("record " + record.id + " has no frames");
  const int rows = record.frames.front().truth.rows();
  const int cols = record.frames.front().truth.cols();

  fs::create_directories(root);
  const fs::path dir = root / record.id;
  {
    std::lock_guard lock(index_mutex());
    std::error_code ec;
    if (!fs::create_directory(dir, ec)) {
      throw StorageError(ec ? "cannot create " + dir.string() + ": " + ec.message()
                            : "record id collision: " + record.id);
    }
  }
  fs::create_directories(dir / "frames");

  json frames = json::array();
  for (std::size_t i = 0; i < record.frames.size(); ++i) {
    const FrameRecord& f = record.frames[i];
    if (f.truth.rows() != rows || f.truth.cols() != cols || f.predicted.rows() != rows || f.predicted.cols() != cols ||
        f.appearance.rows() != rows || f.appearance.cols() != cols) {
      throw StorageError("record " + record.id + " mixes grid shapes");
    }
    const std::string stem = frame_stem(i);
    detail::write_file(dir / "frames" / (stem + ".truth.pgm"), encode_pgm(f.truth));
    detail::write_file(dir / "frames" / (stem + ".pred.pgm"), encode_pgm(f.predicted));
    detail::write_file(dir / "frames" / (stem + ".app.bin"), encode_appearance(f.appearance));
    frames.push_back({{"index", i},
                      {"tick", f.tick_index},
                      {"timestamp", f.timestamp},
                      {"ego_speed_kmh", f.ego_speed_kmh},
                      {"effective_cmd", f.effective_cmd}});
  }
  const json manifest = {{"format", kRecordFormat},
                         {"id", record.id},
                         {"fps", record.fps},
                         {"rows", rows},
                         {"cols", cols},
                         {"event", record.event},
                         {"km_driven_at_event", record.km_driven_at_event},
                         {"ride_duration_min", record.ride_duration_min},
                         {"frames", frames}};
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  std::lock_guard lock(index_mutex());
  const fs::path index_path = root / "manifest.json";
  json index = {{"format", kIndexFormat}, {"records", json::array()}};
  if (fs::exists(index_path)) index = read_json(index_path);
  index["records"].push_back(record.id);
  detail::write_file(index_path, index.dump(2) + "\n");
}

std::vector<std::string> list_records(const fs::path& root) {
  const fs::path index_path = root / "manifest.json";
  if (!fs::exists(index_path)) return {};
  const json index = read_json(index_path);
  if (index.value("format", "") != kIndexFormat || !index.contains("records")) {
    throw FormatError(index_path.string(), "not a corner-case index");
  }
  return index.at("records").get<std::vector<std::string>>();
}

CornerCaseRecord load(const fs::path& root, const std::string& id) {
  const fs::path dir = root / id;
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw FormatError(manifest_path.string(), "missing record manifest");
  const json m = read_json(manifest_path);
  CornerCaseRecord record;
  try {
    if (m.at("format").get<std::string>() != kRecordFormat) {
      throw FormatError(manifest_path.string(), "unsupported format " + m.at("format").dump());
    }
    record.id = m.at("id").get<std::string>();
    record.fps = m.at("fps").get<int>();
    record.event = m.at("event").get<InterventionEvent>();
    record.km_driven_at_event = m.at("km_driven_at_event").get<double>();
    record.ride_duration_min = m.at("ride_duration_min").get<double>();
    const int rows = m.at("rows").get<int>();
    const int cols = m.at("cols").get<int>();
    for (const json& jf : m.at("frames")) {
      const std::string stem = frame_stem(jf.at("index").get<std::size_t>());
      FrameRecord f;
      f.tick_index = jf.at("tick").get<std::uint64_t>();
      f.timestamp = jf.at("timestamp").get<double>();
      f.ego_speed_kmh = jf.at("ego_speed_kmh").get<double>();
      f.effective_cmd = jf.at("effective_cmd").get<ControlCommand>();
      for (const auto& [suffix, target] : {std::pair{".truth.pgm", &f.truth}, std::pair{".pred.pgm", &f.predicted}}) {
        const fs::path p = dir / "frames" / (stem + suffix);
        if (!fs::exists(p)) throw FormatError(p.string(), "missing frame file");
        *target = decode_pgm(detail::read_file(p), p.string());
        if (target->rows() != rows || target->cols() != cols) throw FormatError(p.string(), "grid shape mismatch");
      }
      const fs::path app = dir / "frames" / (stem + ".app.bin");
      if (!fs::exists(app)) throw FormatError(app.string(), "missing frame file");
      f.appearance = decode_appearance(detail::read_file(app), rows, cols, app.string());
      record.frames.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string(), e.what());
  } catch (const InputError& e) {
    throw FormatError(manifest_path.string(), e.what());
  }
  return record;
}

}  // namespace aeye
