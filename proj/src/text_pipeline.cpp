#include "conceptscope/text_pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "conceptscope/csv.hpp"
#include "conceptscope/digest.hpp"
#include "conceptscope/error.hpp"
#include "conceptscope/unicode.hpp"

namespace conceptscope {

namespace detail {
extern const std::string_view kBuiltinStopwords;
extern const std::string_view kBuiltinExclusions;
extern const std::string_view kBuiltinIrregulars;
}  // namespace detail

namespace {

// Bumped whenever tokenization or lemmatization rules change; part of the
// pipeline fingerprint stored in every index.
constexpr std::string_view kRulesVersion = "tokenizer-v1;lemmatizer-v1";

template <typename Fn>
void for_each_lexicon_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) fn(line, line_no);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open lexicon " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Lexicons Lexicons::from_text(std::string_view stopwords, std::string_view exclusions,
                             std::string_view irregulars) {
  Lexicons lex;
  for_each_lexicon_line(stopwords, [&](std::string_view w, std::size_t) {
    lex.stopwords_.insert(fold_text(w));
  });
  for_each_lexicon_line(exclusions, [&](std::string_view w, std::size_t) {
    lex.exclusions_.insert(fold_text(w));
  });
  for_each_lexicon_line(irregulars, [&](std::string_view line, std::size_t line_no) {
    std::istringstream fields{std::string(line)};
    std::string plural, lemma, extra;
    if (!(fields >> plural >> lemma) || (fields >> extra)) {
      throw Error(ErrorKind::parse,
                  "irregular plural table line " + std::to_string(line_no) + ": expected '<plural> <lemma>'");
    }
    lex.irregulars_[fold_text(plural)] = fold_text(lemma);
  });
  for (const auto& [plural, lemma] : lex.irregulars_) lex.irregular_lemmas_.insert(lemma);
  // lemmas listed as plurals must map to themselves
  for (const auto& lemma : lex.irregular_lemmas_) {
    auto it = lex.irregulars_.find(lemma);
    if (it != lex.irregulars_.end() && it->second != lemma) {
      throw Error(ErrorKind::invalid_input, "irregular plural table maps lemma '" + lemma +
                                                "' to '" + it->second + "'");
    }
  }
  Fnv1a64 h;
  h.update(kRulesVersion);
  for (auto part : {stopwords, exclusions, irregulars}) {
    h.update("\x1f");
    h.update(part);
  }
  lex.fingerprint_ = "fnv1a64:" + to_hex64(h.value());
  return lex;
}

const Lexicons& Lexicons::builtin() {
  static const Lexicons lex =
      from_text(detail::kBuiltinStopwords, detail::kBuiltinExclusions, detail::kBuiltinIrregulars);
  return lex;
}

Lexicons Lexicons::load(const std::filesystem::path& dir) {
  return from_text(read_file(dir / "stopwords.txt"), read_file(dir / "exclusions.txt"),
                   read_file(dir / "irregular_plurals.txt"));
}

bool Lexicons::is_stopword(std::string_view token) const {
  return stopwords_.contains(std::string(token));
}

bool Lexicons::is_excluded(std::string_view token) const {
  return exclusions_.contains(std::string(token));
}

std::optional<std::string_view> Lexicons::irregular_lemma(std::string_view token) const {
  auto it = irregulars_.find(std::string(token));
  if (it == irregulars_.end()) return std::nullopt;
  return std::string_view(it->second);
}

bool Lexicons::is_irregular_lemma(std::string_view token) const {
  return irregular_lemmas_.contains(std::string(token));
}

TaggerAnnotations TaggerAnnotations::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open annotations " + path.string());
  TaggerAnnotations out;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto obj = nlohmann::json::parse(line);
      TaggedWords words;
      for (const auto& pair : obj.at("tags")) {
        if (!pair.is_array() || pair.size() != 2) throw std::invalid_argument("tag must be [surface, 0|1]");
        const auto& flag = pair[1];
        bool noun = flag.is_boolean() ? flag.get<bool>() : flag.get<int>() != 0;
        words.emplace_back(pair[0].get<std::string>(), noun);
      }
      auto id = obj.at("id").get<std::uint64_t>();
      if (out.find(id)) throw std::invalid_argument("duplicate id " + std::to_string(id));
      out.add(id, std::move(words));
    } catch (const std::exception& e) {
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void TaggerAnnotations::add(std::uint64_t sample_id, TaggedWords words) {
  by_sample_[sample_id] = std::move(words);
}

const TaggedWords* TaggerAnnotations::find(std::uint64_t sample_id) const {
  auto it = by_sample_.find(sample_id);
  return it == by_sample_.end() ? nullptr : &it->second;
}

namespace {

bool is_word_char(UChar32 c) {
  return u_isalnum(c) || (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0;
}

// Joiners kept when they sit between two word characters.
std::optional<char> joiner(UChar32 c) {
  switch (c) {
    case '-':
    case 0x2010:  // hyphen
    case 0x2011:  // non-breaking hyphen
      return '-';
    case '\'':
    case 0x2019:  // right single quotation mark
      return '\'';
    default:
      return std::nullopt;
  }
}

template <typename Emit>
void split_words(std::string_view folded, Emit&& emit) {
  const auto* s = reinterpret_cast<const std::uint8_t*>(folded.data());
  const auto length = static_cast<std::int32_t>(folded.size());
  std::string current;
  std::int32_t i = 0;
  auto flush = [&] {
    if (!current.empty()) {
      emit(std::move(current));
      current.clear();
    }
  };
  while (i < length) {
    std::int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) {
      flush();
      continue;
    }
    if (is_word_char(c)) {
      current.append(folded.substr(start, i - start));
      continue;
    }
    if (auto j = joiner(c); j && !current.empty() && i < length) {
      std::int32_t peek = i;
      UChar32 next;
      U8_NEXT(s, peek, length, next);
      if (next >= 0 && is_word_char(next)) {
        current.push_back(*j);
        continue;
      }
    }
    flush();
  }
  flush();
}

bool has_letter(std::string_view token) {
  const auto* s = reinterpret_cast<const std::uint8_t*>(token.data());
  const auto length = static_cast<std::int32_t>(token.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c >= 0 && u_isalpha(c)) return true;
  }
  return false;
}

bool ends_with(std::string_view s, std::string_view suffix) { return s.ends_with(suffix); }

// One suffix-rule step; returns the input unchanged when no rule applies.
std::string apply_suffix_rule(const std::string& w) {
  const std::size_t n = w.size();
  if (n <= 3) return w;
  if (ends_with(w, "'s")) return w.substr(0, n - 2);
  if (ends_with(w, "ies") && n > 4) return w.substr(0, n - 3) + "y";
  if (ends_with(w, "ves") && n > 4) return w.substr(0, n - 3) + "f";
  for (std::string_view suffix : {"ses", "xes", "zes", "ches", "shes"}) {
    if (ends_with(w, suffix)) return w.substr(0, n - 2);
  }
  if (ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) {
    return w.substr(0, n - 1);
  }
  return w;
}

}  // namespace

std::vector<Token> tokenize(std::string_view caption) {
  std::vector<Token> tokens;
  split_words(fold_text(caption), [&](std::string&& w) { tokens.push_back(Token{std::move(w), {}, false}); });
  return tokens;
}

std::vector<std::string> tokenize_words(std::string_view caption) {
  std::vector<std::string> words;
  split_words(fold_text(caption), [&](std::string&& w) { words.push_back(std::move(w)); });
  return words;
}

std::vector<Token> tag_nouns(std::vector<Token> tokens, const Lexicons& lexicons,
                             const TaggedWords* annotation) {
  if (annotation) {
    std::vector<std::pair<std::string, bool>> expanded;
    for (const auto& [surface, noun] : *annotation) {
      for (auto& w : tokenize_words(surface)) expanded.emplace_back(std::move(w), noun);
    }
    if (expanded.size() != tokens.size()) {
      throw Error(ErrorKind::mismatch, "annotation covers " + std::to_string(expanded.size()) +
                                           " tokens, caption has " + std::to_string(tokens.size()));
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (expanded[i].first != tokens[i].surface) {
        throw Error(ErrorKind::mismatch, "annotation token '" + expanded[i].first +
                                             "' does not match caption token '" + tokens[i].surface + "'");
      }
      tokens[i].is_noun = expanded[i].second;
    }
    return tokens;
  }
  for (auto& t : tokens) {
    t.is_noun = has_letter(t.surface) && !lexicons.is_stopword(t.surface) &&
                !lexicons.is_excluded(t.surface);
  }
  return tokens;
}

std::string lemmatize(std::string_view token, const Lexicons& lexicons) {
  std::string current(token);
  // Every rule shortens the word and an irregular lookup ends the loop, so
  // this terminates at a fixed point.
  while (true) {
    if (auto irregular = lexicons.irregular_lemma(current)) return std::string(*irregular);
    if (lexicons.is_irregular_lemma(current)) return current;
    std::string next = apply_suffix_rule(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

TermSet extract_concept_nouns(std::string_view caption, const Lexicons& lexicons,
                              const TaggedWords* annotation) {
  TermSet nouns;
  for (auto& t : tag_nouns(tokenize(caption), lexicons, annotation)) {
    if (t.is_noun) nouns.push_back(lemmatize(t.surface, lexicons));
  }
  std::sort(nouns.begin(), nouns.end());
  nouns.erase(std::unique(nouns.begin(), nouns.end()), nouns.end());
  return nouns;
}

Concept make_concept(std::string_view name, const Lexicons& lexicons) {
  Concept c;
  c.name = normalize_concept_name(name);
  for (auto& w : tokenize_words(c.name)) c.unigrams.push_back(lemmatize(w, lexicons));
  if (c.unigrams.empty()) {
    throw Error(ErrorKind::invalid_input, "concept '" + std::string(name) + "' has no word tokens");
  }
  return c;
}

std::vector<Concept> compile_concepts(std::span<const TermSet> downstream_noun_sets,
                                      std::span<const std::string> class_names,
                                      const Lexicons& lexicons) {
  if (downstream_noun_sets.empty() && class_names.empty()) {
    throw Error(ErrorKind::invalid_input, "no downstream samples or class names given");
  }
  std::map<std::string, std::uint64_t> counts;
  for (const auto& set : downstream_noun_sets) {
    TermSet unique;
    for (const auto& term : set) unique.push_back(normalize_concept_name(term));
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (auto& term : unique)
      if (!term.empty()) ++counts[term];
  }

  std::vector<Concept> out;
  std::unordered_set<std::string> taken;
  for (const auto& name : class_names) {
    Concept c = make_concept(name, lexicons);
    if (!taken.insert(c.name).second) continue;
    if (auto it = counts.find(c.name); it != counts.end()) c.downstream_count = it->second;
    out.push_back(std::move(c));
  }
  for (const auto& [term, count] : counts) {
    if (taken.contains(term)) continue;
    bool curated = term.find(' ') != std::string::npos;
    if (!curated && count < kMinDownstreamSamples) continue;
    Concept c = make_concept(term, lexicons);
    c.downstream_count = count;
    taken.insert(term);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Concept> load_concepts(const std::filesystem::path& path, const Lexicons& lexicons) {
  std::string text = read_file(path);
  std::vector<Concept> out;
  std::unordered_set<std::string> seen;
  for_each_lexicon_line(text, [&](std::string_view line, std::size_t line_no) {
    if (auto bad = find_invalid_utf8(line)) {
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": invalid UTF-8");
    }
    Concept c = make_concept(line, lexicons);
    if (!seen.insert(c.name).second) {
      throw Error(ErrorKind::invalid_input,
                  path.string() + ":" + std::to_string(line_no) + ": duplicate concept '" + c.name + "'");
    }
    out.push_back(std::move(c));
  });
  if (out.empty()) throw Error(ErrorKind::parse, path.string() + ": no concepts");
  return out;
}

}  // namespace conceptscope
