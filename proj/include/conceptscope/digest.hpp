#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace conceptscope {

/// Incremental 64-bit FNV-1a. Used for index checksums, pipeline
/// fingerprints and input-file digests in run reports.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  void update(std::span<const std::byte> bytes) noexcept;
  void update(std::string_view text) noexcept;
  std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = kOffsetBasis;
};

std::uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// 16 lowercase hex digits.
std::string to_hex64(std::uint64_t value);

/// Digest of a file's full contents, "fnv1a64:<hex>".
std::string file_digest(const std::filesystem::path& path);

}  // namespace conceptscope
