#include "conceptscope/csv.hpp"

#include <charconv>
#include <cmath>

#include "conceptscope/error.hpp"

namespace conceptscope {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorKind::parse, "unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string_view trim(std::string_view s) noexcept {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

namespace {

void strip_line_end(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

CsvReader::CsvReader(const std::filesystem::path& path,
                     std::initializer_list<std::string_view> header)
    : path_(path), in_(path, std::ios::binary), columns_(header.size()) {
  if (!in_) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in_, line)) throw Error(ErrorKind::parse, path.string() + ": empty file");
  ++line_no_;
  strip_line_end(line);
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  auto got = split_csv_line(line);
  bool ok = got.size() == header.size();
  if (ok) {
    std::size_t i = 0;
    for (auto h : header) ok = ok && trim(got[i++]) == h;
  }
  if (!ok) {
    std::string expected;
    for (auto h : header) {
      if (!expected.empty()) expected += ',';
      expected += h;
    }
    throw Error(ErrorKind::parse, where() + "expected header '" + expected + "'");
  }
}

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    strip_line_end(line);
    if (trim(line).empty()) continue;
    try {
      fields = split_csv_line(line);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, where() + e.what());
    }
    if (fields.size() != columns_) {
      throw Error(ErrorKind::parse, where() + "expected " + std::to_string(columns_) +
                                        " fields, got " + std::to_string(fields.size()));
    }
    return true;
  }
  if (in_.bad()) throw Error(ErrorKind::io, "read failure on " + path_.string());
  return false;
}

std::string CsvReader::where() const {
  return path_.string() + ":" + std::to_string(line_no_) + ": ";
}

bool parse_finite_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return false;
  out = v;
  return true;
}

bool parse_uint64(std::string_view text, std::uint64_t& out) {
  text = trim(text);
  if (text.empty()) return false;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return false;
  out = v;
  return true;
}

}  // namespace conceptscope
