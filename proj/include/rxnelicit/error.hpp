#pragma once

#include <stdexcept>
#include <string>

namespace rxnelicit {

// Error categories map onto the CLI exit codes: usage/config 2, data 3,
// backend 4.
enum class ErrorKind {
  kConfig = 2,
  kData = 3,
  kBackend = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) { }

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &what)
      : Error(ErrorKind::kConfig, what) { }
};

class DataError : public Error {
 public:
  explicit DataError(const std::string &what)
      : Error(ErrorKind::kData, what) { }
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string &what)
      : Error(ErrorKind::kBackend, what) { }
};

}  // namespace rxnelicit
