#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "conceptscope/corpus_io.hpp"
#include "conceptscope/posting_list.hpp"
#include "conceptscope/text_pipeline.hpp"

namespace conceptscope {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
};

/// Term -> posting list, with heterogeneous string_view lookup.
using PostingMap = std::unordered_map<std::string, PostingList, StringHash, std::equal_to<>>;

/// Inverted unigram dictionary over a corpus' lemmatized caption nouns.
struct TextIndex {
  std::string corpus_name;
  std::uint64_t sample_count = 0;
  std::string pipeline_fingerprint;
  PostingMap vocabulary;

  const PostingList* find(std::string_view term) const;
  std::vector<std::string> sorted_terms() const;
  /// Sum of posting-list lengths, i.e. distinct (sample, noun) pairs.
  std::uint64_t total_postings() const;

  bool operator==(const TextIndex&) const = default;
};

/// Accumulates per-sample noun sets in index order.
class TextIndexBuilder {
 public:
  TextIndexBuilder(std::string corpus_name, std::string pipeline_fingerprint);

  /// Next sample; indices are assigned consecutively from 0.
  void add(const TermSet& nouns);
  std::uint64_t sample_count() const noexcept { return next_; }
  TextIndex finish() &&;

 private:
  TextIndex index_;
  std::uint64_t next_ = 0;
};

struct IndexBuildOptions {
  unsigned workers = 1;
  StreamOptions stream;
  const TaggerAnnotations* annotations = nullptr;
  const Lexicons* lexicons = nullptr;  // nullptr selects Lexicons::builtin()
};

/// Indexes every caption of the corpus. Shards are processed by up to
/// `workers` threads into partial indices merged in shard order; the result
/// is the same for any worker count.
TextIndex build_text_index(const CorpusManifest& manifest, const IndexBuildOptions& options = {});

/// In-memory variant, sample i is captions[i].
TextIndex build_text_index(std::string_view corpus_name, std::span<const std::string> captions,
                           const Lexicons& lexicons = Lexicons::builtin());

struct FrequencyHits {
  std::uint64_t count = 0;
  PostingList hits;
};

/// Samples whose caption contains every unigram of the concept (anywhere,
/// not necessarily adjacent). A unigram missing from the vocabulary yields
/// no hits.
FrequencyHits text_frequency(const TextIndex& index, const Concept& query);

/// Samples whose normalized caption tokens contain the phrase's tokens
/// contiguously. Exact surface match: no noun filtering or lemmatization.
std::uint64_t exact_phrase_count(const CorpusManifest& manifest, std::string_view phrase,
                                 StreamOptions options = {});

/// Same test on a single caption.
bool contains_phrase(std::span<const std::string> caption_tokens, std::span<const std::string> phrase_tokens);

void save_index(const TextIndex& index, const std::filesystem::path& path);
TextIndex load_index(const std::filesystem::path& path);

/// `concept,text_count` report.
void write_text_frequency_csv(const std::filesystem::path& path, const TextIndex& index,
                              std::span<const Concept> concepts);

}  // namespace conceptscope
