#include "conceptscope/digest.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "conceptscope/error.hpp"

namespace conceptscope {

void Fnv1a64::update(std::span<const std::byte> bytes) noexcept {
  std::uint64_t h = state_;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= kPrime;
  }
  state_ = h;
}

void Fnv1a64::update(std::string_view text) noexcept {
  update(std::as_bytes(std::span(text.data(), text.size())));
}

std::uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept {
  Fnv1a64 h;
  h.update(bytes);
  return h.value();
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  Fnv1a64 h;
  h.update(text);
  return h.value();
}

std::string to_hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf, 16);
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  Fnv1a64 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return "fnv1a64:" + to_hex64(h.value());
}

}  // namespace conceptscope
