#pragma once

// CFIX container shared by text and image indices.
//
//   "CFIX" | u8 version | u8 section tag | section payload | u64 checksum
//
// Integers are little-endian; varints are unsigned LEB128. The checksum is
// FNV-1a 64 over every preceding byte.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conceptscope/posting_list.hpp"

namespace conceptscope::cfix {

inline constexpr char kMagic[4] = {'C', 'F', 'I', 'X'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kTextSection = 'T';
inline constexpr std::uint8_t kImageSection = 'I';

class Writer {
 public:
  explicit Writer(std::uint8_t section);

  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u64(std::uint64_t v);
  void f64(double v);
  void varint(std::uint64_t v);
  void str(std::string_view s);
  /// Length, then first value and successive gaps as varints.
  void postings(std::span<const SampleIndex> indices);

  /// Appends the checksum and writes the file.
  void finish(const std::filesystem::path& path);

 private:
  std::string bytes_;
};

class Reader {
 public:
  /// Reads the file, checks magic, size and checksum, and positions after
  /// the header. Throws Error(integrity) on any violation.
  Reader(const std::filesystem::path& path, std::uint8_t expected_section);

  std::uint8_t u8();
  std::uint64_t u64();
  double f64();
  std::uint64_t varint();
  std::string str();
  std::vector<SampleIndex> postings(std::uint64_t sample_count);

  /// Fails unless the payload was consumed exactly.
  void expect_end() const;

 private:
  [[noreturn]] void truncated() const;

  std::filesystem::path path_;
  std::string bytes_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;  // start of the checksum
};

}  // namespace conceptscope::cfix
