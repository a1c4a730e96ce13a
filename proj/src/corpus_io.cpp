#include "conceptscope/corpus_io.hpp"

#include <algorithm>
#include <json.hpp>

#include "conceptscope/csv.hpp"
#include "conceptscope/error.hpp"
#include "conceptscope/unicode.hpp"

namespace conceptscope {

namespace fs = std::filesystem;
using nlohmann::json;

CorpusManifest open_corpus(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::io, "cannot open manifest " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  CorpusManifest m;
  try {
    if (!doc.is_object()) throw Error(ErrorKind::parse, "manifest is not a JSON object");
    m.format_version = doc.at("format_version").get<int>();
    if (m.format_version != kManifestFormatVersion) {
      throw Error(ErrorKind::invalid_input,
                  "unknown version " + std::to_string(m.format_version) + " in manifest " +
                      manifest_path.string());
    }
    m.corpus_name = doc.at("corpus_name").get<std::string>();
    m.sample_count = doc.at("sample_count").get<std::uint64_t>();
    const fs::path base = manifest_path.parent_path();
    for (const auto& entry : doc.at("shards")) {
      fs::path p = entry.get<std::string>();
      if (p.is_relative()) p = base / p;
      m.shard_paths.push_back(p.lexically_normal());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  std::sort(m.shard_paths.begin(), m.shard_paths.end());
  for (const auto& p : m.shard_paths) {
    if (!fs::is_regular_file(p)) throw Error(ErrorKind::io, "missing shard " + p.string());
  }
  return m;
}

void write_manifest(const CorpusManifest& manifest, const fs::path& manifest_path) {
  const fs::path base = fs::absolute(manifest_path).parent_path().lexically_normal();
  json shards = json::array();
  for (const auto& p : manifest.shard_paths) {
    fs::path abs = fs::absolute(p).lexically_normal();
    fs::path rel = abs.lexically_relative(base);
    bool inside = !rel.empty() && *rel.begin() != "..";
    shards.push_back(inside ? rel.generic_string() : abs.generic_string());
  }
  json doc = {{"corpus_name", manifest.corpus_name},
              {"format_version", manifest.format_version},
              {"shards", shards},
              {"sample_count", manifest.sample_count}};
  std::ofstream out(manifest_path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + manifest_path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failure on " + manifest_path.string());
}

ShardReader::ShardReader(const fs::path& path, StreamOptions options)
    : path_(path), options_(options), in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorKind::io, "cannot open shard " + path.string());
}

void ShardReader::fail(const std::string& message) const {
  throw Error(ErrorKind::parse, path_.string() + ":" + std::to_string(line_no_) + ": " + message);
}

bool ShardReader::next(SampleRecord& record) {
  while (true) {
    std::uint64_t line_start = byte_offset_;
    if (!std::getline(in_, line_)) {
      if (in_.bad()) throw Error(ErrorKind::io, "read failure on " + path_.string());
      return false;
    }
    ++line_no_;
    byte_offset_ += line_.size() + 1;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    if (trim(line_).empty()) continue;

    std::string problem;
    if (auto bad = find_invalid_utf8(line_)) {
      problem = "invalid UTF-8 at byte offset " + std::to_string(line_start + *bad);
    } else {
      try {
        json obj = json::parse(line_);
        if (!obj.is_object()) throw std::invalid_argument("record is not a JSON object");
        const auto& id = obj.at("id");
        if (!id.is_number_unsigned()) throw std::invalid_argument("\"id\" must be a non-negative integer");
        record.sample_id = id.get<std::uint64_t>();
        record.caption = obj.at("caption").get<std::string>();
        record.image_ref.reset();
        if (auto it = obj.find("image"); it != obj.end() && !it->is_null()) {
          record.image_ref = it->get<std::string>();
        }
        return true;
      } catch (const std::exception& e) {
        problem = e.what();
      }
    }
    if (!options_.lenient) fail(problem);
    ++skipped_;
  }
}

SampleStream::SampleStream(const CorpusManifest& manifest, StreamOptions options)
    : manifest_(manifest), options_(options) {}

std::uint64_t SampleStream::skipped_lines() const noexcept {
  return skipped_done_ + (reader_ ? reader_->skipped_lines() : 0);
}

void throw_duplicate_sample(std::uint64_t sample_id, const fs::path& first, const fs::path& second) {
  throw Error(ErrorKind::invalid_input, "duplicate sample_id " + std::to_string(sample_id) +
                                            " in shards " + first.string() + " and " +
                                            second.string());
}

bool SampleStream::next(SampleRecord& record) {
  while (shard_ < manifest_.shard_paths.size()) {
    if (!reader_) reader_.emplace(manifest_.shard_paths[shard_], options_);
    if (reader_->next(record)) {
      auto [it, inserted] = seen_.try_emplace(record.sample_id, static_cast<std::uint32_t>(shard_));
      if (!inserted) {
        throw_duplicate_sample(record.sample_id, manifest_.shard_paths[it->second],
                               manifest_.shard_paths[shard_]);
      }
      ++records_;
      return true;
    }
    skipped_done_ += reader_->skipped_lines();
    reader_.reset();
    ++shard_;
  }
  return false;
}

void for_each_sample(const CorpusManifest& manifest, StreamOptions options,
                     const std::function<void(const SampleRecord&)>& fn) {
  SampleStream stream(manifest, options);
  SampleRecord record;
  while (stream.next(record)) fn(record);
}

std::uint64_t validate_corpus(const CorpusManifest& manifest, StreamOptions options) {
  SampleStream stream(manifest, options);
  SampleRecord record;
  while (stream.next(record)) {
  }
  if (stream.records_read() != manifest.sample_count) {
    throw Error(ErrorKind::mismatch,
                "manifest declares " + std::to_string(manifest.sample_count) +
                    " samples but shards hold " + std::to_string(stream.records_read()));
  }
  return stream.records_read();
}

std::optional<double> PerformanceTable::find(std::string_view concept_name) const {
  auto it = entries.find(normalize_concept_name(concept_name));
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

PerformanceTable load_performance(const fs::path& path) {
  CsvReader reader(path, {"concept", "score"});
  PerformanceTable table;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    std::string name = normalize_concept_name(fields[0]);
    if (name.empty()) throw Error(ErrorKind::parse, reader.where() + "empty concept name");
    double score = 0;
    if (!parse_finite_double(fields[1], score)) {
      throw Error(ErrorKind::parse, reader.where() + "score '" + fields[1] + "' is not a finite number");
    }
    if (!table.entries.emplace(name, score).second) {
      throw Error(ErrorKind::invalid_input, reader.where() + "duplicate concept '" + name + "'");
    }
  }
  if (table.entries.empty()) throw Error(ErrorKind::parse, path.string() + ": empty file");
  return table;
}

}  // namespace conceptscope
