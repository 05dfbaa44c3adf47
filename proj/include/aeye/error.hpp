#pragma once

#include <stdexcept>
#include <string>

namespace aeye {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Out-of-range or malformed configuration. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("config: " + field + ": " + what), field_(std::move(field)), reason_(what) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class SequencingError : public Error {
 public:
  using Error::Error;
};

class CaptureError : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

/// A file on disk did not parse. `file()` is the path that failed.
class FormatError : public Error {
 public:
  FormatError(std::string file, const std::string& what)
      : Error(file + ": " + what), file_(std::move(file)) {}
  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

class EnrichmentError : public Error {
 public:
  EnrichmentError(double achieved_mean, const std::string& what)
      : Error(what), achieved_mean_(achieved_mean) {}
  double achieved_mean() const noexcept { return achieved_mean_; }

 private:
  double achieved_mean_;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace aeye
