#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace conceptscope {

struct Token {
  std::string surface;
  std::string lemma;
  bool is_noun = false;

  bool operator==(const Token&) const = default;
};

/// Sorted, duplicate-free list of terms. Used for per-caption noun sets and
/// per-sample concept sets.
using TermSet = std::vector<std::string>;

struct Concept {
  std::string name;                    // normalized
  std::vector<std::string> unigrams;   // lemmatized, non-empty
  std::uint64_t downstream_count = 0;
};

inline constexpr std::uint64_t kMinDownstreamSamples = 5;

/// Stopword list, verb/adjective exclusion list and irregular plural table
/// that drive the built-in noun heuristic and lemmatizer.
class Lexicons {
 public:
  /// The lexicons shipped in data/lexicon, compiled into the library.
  static const Lexicons& builtin();

  /// Loads stopwords.txt, exclusions.txt and irregular_plurals.txt from `dir`.
  static Lexicons load(const std::filesystem::path& dir);

  static Lexicons from_text(std::string_view stopwords, std::string_view exclusions,
                            std::string_view irregulars);

  bool is_stopword(std::string_view token) const;
  bool is_excluded(std::string_view token) const;
  /// Irregular-table lemma for a plural form, if listed.
  std::optional<std::string_view> irregular_lemma(std::string_view token) const;
  /// True when `token` is a lemma in the irregular table (e.g. "goose").
  bool is_irregular_lemma(std::string_view token) const;

  /// Digest of lexicon contents and tokenizer rule version.
  const std::string& fingerprint() const noexcept { return fingerprint_; }

  std::size_t stopword_count() const noexcept { return stopwords_.size(); }
  std::size_t exclusion_count() const noexcept { return exclusions_.size(); }
  std::size_t irregular_count() const noexcept { return irregulars_.size(); }

 private:
  std::unordered_set<std::string> stopwords_;
  std::unordered_set<std::string> exclusions_;
  std::unordered_map<std::string, std::string> irregulars_;
  std::unordered_set<std::string> irregular_lemmas_;
  std::string fingerprint_;
};

/// (surface, is_noun) pairs produced by an external POS tagger for one caption.
using TaggedWords = std::vector<std::pair<std::string, bool>>;

/// External tagger output keyed by sample_id.
class TaggerAnnotations {
 public:
  /// JSONL: {"id": <uint64>, "tags": [[<surface>, <0|1>], ...]} per line.
  static TaggerAnnotations load(const std::filesystem::path& path);

  void add(std::uint64_t sample_id, TaggedWords words);
  const TaggedWords* find(std::uint64_t sample_id) const;
  std::size_t size() const noexcept { return by_sample_.size(); }

 private:
  std::unordered_map<std::uint64_t, TaggedWords> by_sample_;
};

/// Folds the caption (NFKC + lowercase) and splits it on whitespace and
/// punctuation. Hyphens and apostrophes between word characters stay inside
/// the token; tokens with no word characters are dropped.
std::vector<Token> tokenize(std::string_view caption);

/// Surfaces only.
std::vector<std::string> tokenize_words(std::string_view caption);

/// Marks nouns. With annotations the tags are copied positionally (each
/// annotated surface is itself tokenized, so whitespace-level tags work);
/// without, a token is a noun iff it contains a letter and is in neither the
/// stopword nor the exclusion lexicon.
std::vector<Token> tag_nouns(std::vector<Token> tokens, const Lexicons& lexicons,
                             const TaggedWords* annotation = nullptr);

/// Irregular table first, then suffix rules, iterated to a fixed point so
/// that lemmatize(lemmatize(t)) == lemmatize(t).
std::string lemmatize(std::string_view token, const Lexicons& lexicons = Lexicons::builtin());

/// tokenize -> tag_nouns -> lemmatize -> deduplicate.
TermSet extract_concept_nouns(std::string_view caption, const Lexicons& lexicons = Lexicons::builtin(),
                              const TaggedWords* annotation = nullptr);

/// Concept from a class name or noun: normalized name, unigrams are the
/// lemmatized tokens of the name (no noun filtering).
Concept make_concept(std::string_view name, const Lexicons& lexicons = Lexicons::builtin());

/// Counts each noun over downstream samples and keeps those present in at
/// least kMinDownstreamSamples of them. Multi-word entries and every
/// `class_names` entry are curated and kept unconditionally. Output: class
/// names in input order, then mined nouns in lexicographic order.
std::vector<Concept> compile_concepts(std::span<const TermSet> downstream_noun_sets,
                                      std::span<const std::string> class_names = {},
                                      const Lexicons& lexicons = Lexicons::builtin());

/// One concept name per line (`#` comments allowed).
std::vector<Concept> load_concepts(const std::filesystem::path& path,
                                   const Lexicons& lexicons = Lexicons::builtin());

}  // namespace conceptscope
