#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hinpath::io {

std::string read_file(const std::filesystem::path& file);

/// Writes to a sibling temp file, then renames over `file`.
void write_file_atomic(const std::filesystem::path& file, std::string_view bytes);

std::string sha256_hex(std::string_view bytes);

class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace hinpath::io
