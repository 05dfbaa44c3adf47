#pragma once

#include <atomic>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <unistd.h>
#include <vector>

#include "aeye/semantic.hpp"

namespace aeye::test {

// Grid from rows of class ids, written top row first.
inline SemanticGrid grid(std::initializer_list<std::initializer_list<ClassId>> rows) {
  std::vector<ClassId> cells;
  int n_rows = 0;
  int n_cols = 0;
  for (const auto& r : rows) {
    n_cols = static_cast<int>(r.size());
    cells.insert(cells.end(), r.begin(), r.end());
    ++n_rows;
  }
  return SemanticGrid(n_rows, n_cols, std::move(cells));
}

inline constexpr ClassId V = ClassId::void_;
inline constexpr ClassId R = ClassId::road;
inline constexpr ClassId S = ClassId::sidewalk;
inline constexpr ClassId P = ClassId::pedestrian;
inline constexpr ClassId C = ClassId::vehicle;

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("aeye-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace aeye::test
