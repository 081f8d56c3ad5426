#pragma once

#include <stdexcept>
#include <string>

namespace hinpath {

// Process exit codes used by the CLI.
enum class ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& kind, const std::string& what)
      : std::runtime_error(what), code_(code), kind_(kind) {}

  ExitCode code() const { return code_; }
  const std::string& kind() const { return kind_; }

 private:
  ExitCode code_;
  std::string kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ExitCode::kUsage, "usage", what) {}
};

/// Malformed input: bad dataset files, unknown path strings, stale caches.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, "data", what) {}
  DataError(const std::string& file, std::size_t line, const std::string& what)
      : Error(ExitCode::kData, "data", file + ":" + std::to_string(line) + ": " + what) {}
};

/// Non-finite losses or gradients, shape mismatches in numeric kernels.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::kNumeric, "numeric", what) {}
};

}  // namespace hinpath
