#pragma once

// Little-endian packing helpers shared by the model and capture formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

namespace aeye::detail {

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::string_view in, std::size_t offset) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

/// Whole-file read; throws StorageError if the file cannot be opened.
std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate then write.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace aeye::detail
