#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace conceptscope {

/// One image-text pair. `sample_id` is the user-supplied identifier; indices
/// use the 0-based position in the deterministic stream instead.
struct SampleRecord {
  std::uint64_t sample_id = 0;
  std::string caption;
  std::optional<std::string> image_ref;

  bool operator==(const SampleRecord&) const = default;
};

inline constexpr int kManifestFormatVersion = 1;

struct CorpusManifest {
  std::string corpus_name;
  std::vector<std::filesystem::path> shard_paths;  // resolved, sorted lexicographically
  std::uint64_t sample_count = 0;
  int format_version = kManifestFormatVersion;
};

/// Reads and checks a manifest. Shard paths are resolved relative to the
/// manifest's directory and must exist; shard contents are not read.
CorpusManifest open_corpus(const std::filesystem::path& manifest_path);

/// Writes a manifest; shard paths under the manifest's directory are stored
/// relative to it.
void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& manifest_path);

struct StreamOptions {
  bool lenient = false;  // skip-and-count malformed lines instead of failing
};

/// Sequential reader over one caption JSONL shard.
class ShardReader {
 public:
  ShardReader(const std::filesystem::path& path, StreamOptions options);

  bool next(SampleRecord& record);

  std::uint64_t line_number() const noexcept { return line_no_; }
  std::uint64_t skipped_lines() const noexcept { return skipped_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  [[noreturn]] void fail(const std::string& message) const;

  std::filesystem::path path_;
  StreamOptions options_;
  std::ifstream in_;
  std::string line_;
  std::uint64_t line_no_ = 0;
  std::uint64_t byte_offset_ = 0;  // offset of the current line in the shard
  std::uint64_t skipped_ = 0;
};

/// Every record of a corpus exactly once, in shard order then line order.
/// Duplicate sample ids anywhere in the corpus are fatal regardless of
/// strictness.
class SampleStream {
 public:
  SampleStream(const CorpusManifest& manifest, StreamOptions options = {});

  bool next(SampleRecord& record);

  std::uint64_t records_read() const noexcept { return records_; }
  std::uint64_t skipped_lines() const noexcept;

 private:
  const CorpusManifest& manifest_;
  StreamOptions options_;
  std::size_t shard_ = 0;
  std::optional<ShardReader> reader_;
  std::uint64_t skipped_done_ = 0;
  std::uint64_t records_ = 0;
  std::unordered_map<std::uint64_t, std::uint32_t> seen_;  // sample_id -> shard
};

void for_each_sample(const CorpusManifest& manifest, StreamOptions options,
                     const std::function<void(const SampleRecord&)>& fn);

/// Full scan; fails unless the record count equals manifest.sample_count.
std::uint64_t validate_corpus(const CorpusManifest& manifest, StreamOptions options = {});

/// Reports a duplicate sample id across (or within) shards.
[[noreturn]] void throw_duplicate_sample(std::uint64_t sample_id,
                                         const std::filesystem::path& first,
                                         const std::filesystem::path& second);

/// Per-concept scores keyed by normalized concept name.
struct PerformanceTable {
  std::map<std::string, double> entries;

  std::optional<double> find(std::string_view concept_name) const;
  std::size_t size() const noexcept { return entries.size(); }
};

/// Reads a `concept,score` CSV. Duplicate concepts (after normalization),
/// non-finite scores and empty files are errors.
PerformanceTable load_performance(const std::filesystem::path& path);

/// Row-major float32 matrix, as stored in the embedding interchange files.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }
  const std::vector<float>& values() const noexcept { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

/// `<path>` holds raw little-endian float32 rows; `<path>.json` holds
/// {"count", "dim", "dtype": "f32"}.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

/// One label per line; blank lines are not allowed.
std::vector<std::string> load_labels(const std::filesystem::path& path);

}  // namespace conceptscope
