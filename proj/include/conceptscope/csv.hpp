#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace conceptscope {

// Minimal RFC 4180 handling: comma separated, fields may be double-quoted,
// "" inside a quoted field is a literal quote. Records never span lines.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_field(std::string_view value);

/// Line reader for the toolkit's CSV interchange files. The first line must
/// match `header` exactly (after trimming a UTF-8 BOM and trailing CR).
class CsvReader {
 public:
  CsvReader(const std::filesystem::path& path, std::initializer_list<std::string_view> header);

  /// Reads the next non-empty record. Throws on a field-count mismatch.
  bool next(std::vector<std::string>& fields);

  std::uint64_t line_number() const noexcept { return line_no_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  /// "<path>:<line>: " prefix for error messages.
  std::string where() const;

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t columns_ = 0;
  std::uint64_t line_no_ = 0;
};

/// Parses a finite double; rejects trailing garbage, NaN and infinities.
bool parse_finite_double(std::string_view text, double& out);
bool parse_uint64(std::string_view text, std::uint64_t& out);

std::string_view trim(std::string_view s) noexcept;

}  // namespace conceptscope
