#include "cfix.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "conceptscope/digest.hpp"
#include "conceptscope/error.hpp"

namespace conceptscope::cfix {

namespace {

constexpr std::size_t kHeaderSize = sizeof(kMagic) + 2;
constexpr std::size_t kChecksumSize = 8;

}  // namespace

Writer::Writer(std::uint8_t section) {
  bytes_.append(kMagic, sizeof(kMagic));
  u8(kVersion);
  u8(section);
}

void Writer::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::varint(std::uint64_t v) {
  while (v >= 0x80) {
    u8(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  u8(static_cast<std::uint8_t>(v));
}

void Writer::str(std::string_view s) {
  varint(s.size());
  bytes_.append(s);
}

void Writer::postings(std::span<const SampleIndex> indices) {
  varint(indices.size());
  SampleIndex prev = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    varint(i == 0 ? indices[i] : indices[i] - prev);
    prev = indices[i];
  }
}

void Writer::finish(const std::filesystem::path& path) {
  u64(fnv1a64(std::string_view(bytes_)));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
  out.close();
  if (!out) throw Error(ErrorKind::io, "write failure on " + path.string());
}

Reader::Reader(const std::filesystem::path& path, std::uint8_t expected_section) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open index " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  bytes_ = std::move(ss).str();

  if (bytes_.size() < sizeof(kMagic) || std::memcmp(bytes_.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::integrity, path.string() + ": magic-number mismatch");
  }
  if (bytes_.size() < kHeaderSize + kChecksumSize) truncated();
  end_ = bytes_.size() - kChecksumSize;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) {
    stored |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[end_ + i])) << (8 * i);
  }
  if (stored != fnv1a64(std::string_view(bytes_.data(), end_))) {
    throw Error(ErrorKind::integrity, path.string() + ": checksum mismatch");
  }
  pos_ = sizeof(kMagic);
  if (std::uint8_t version = u8(); version != kVersion) {
    throw Error(ErrorKind::integrity,
                path.string() + ": unsupported index version " + std::to_string(version));
  }
  if (std::uint8_t section = u8(); section != expected_section) {
    throw Error(ErrorKind::integrity, path.string() + ": wrong index section '" +
                                          std::string(1, static_cast<char>(section)) + "'");
  }
}

void Reader::truncated() const {
  throw Error(ErrorKind::integrity, path_.string() + ": truncated file");
}

std::uint8_t Reader::u8() {
  if (pos_ >= end_) truncated();
  return static_cast<std::uint8_t>(bytes_[pos_++]);
}

std::uint64_t Reader::u64() {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
  return v;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::uint64_t Reader::varint() {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    std::uint8_t b = u8();
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if ((b & 0x80) == 0) return v;
  }
  throw Error(ErrorKind::integrity, path_.string() + ": varint overflow");
}

std::string Reader::str() {
  std::uint64_t n = varint();
  if (n > end_ - pos_) truncated();
  std::string s = bytes_.substr(pos_, n);
  pos_ += n;
  return s;
}

std::vector<SampleIndex> Reader::postings(std::uint64_t sample_count) {
  std::uint64_t n = varint();
  if (n > end_ - pos_) truncated();  // every entry takes at least one byte
  std::vector<SampleIndex> out;
  out.reserve(n);
  std::uint64_t value = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint64_t delta = varint();
    if (i > 0 && delta == 0) throw Error(ErrorKind::integrity, path_.string() + ": zero gap in posting list");
    value = i == 0 ? delta : value + delta;
    if (value >= sample_count) {
      throw Error(ErrorKind::integrity, path_.string() + ": posting index out of range");
    }
    out.push_back(static_cast<SampleIndex>(value));
  }
  return out;
}

void Reader::expect_end() const {
  if (pos_ != end_) throw Error(ErrorKind::integrity, path_.string() + ": trailing bytes in payload");
}

}  // namespace conceptscope::cfix
