#include "conceptscope/inverted_index.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <limits>
#include <thread>

#include "cfix.hpp"
#include "conceptscope/csv.hpp"
#include "conceptscope/error.hpp"

namespace conceptscope {

namespace fs = std::filesystem;

const PostingList* TextIndex::find(std::string_view term) const {
  auto it = vocabulary.find(term);
  return it == vocabulary.end() ? nullptr : &it->second;
}

std::vector<std::string> TextIndex::sorted_terms() const {
  std::vector<std::string> terms;
  terms.reserve(vocabulary.size());
  for (const auto& [term, list] : vocabulary) terms.push_back(term);
  std::sort(terms.begin(), terms.end());
  return terms;
}

std::uint64_t TextIndex::total_postings() const {
  std::uint64_t total = 0;
  for (const auto& [term, list] : vocabulary) total += list.size();
  return total;
}

TextIndexBuilder::TextIndexBuilder(std::string corpus_name, std::string pipeline_fingerprint) {
  index_.corpus_name = std::move(corpus_name);
  index_.pipeline_fingerprint = std::move(pipeline_fingerprint);
}

void TextIndexBuilder::add(const TermSet& nouns) {
  if (next_ > std::numeric_limits<SampleIndex>::max()) {
    throw Error(ErrorKind::invalid_input, "corpus exceeds the 32-bit sample index space");
  }
  const auto idx = static_cast<SampleIndex>(next_++);
  for (const auto& noun : nouns) {
    auto it = index_.vocabulary.find(std::string_view(noun));
    if (it == index_.vocabulary.end()) it = index_.vocabulary.emplace(noun, PostingList{}).first;
    it->second.append(idx);
  }
}

TextIndex TextIndexBuilder::finish() && {
  index_.sample_count = next_;
  return std::move(index_);
}

namespace {

struct ShardPartial {
  TextIndex index;  // shard-local sample indices
  std::vector<std::uint64_t> sample_ids;
};

ShardPartial index_shard(const fs::path& shard, const IndexBuildOptions& options, const Lexicons& lexicons) {
  ShardReader reader(shard, options.stream);
  TextIndexBuilder builder("", "");
  ShardPartial partial;
  SampleRecord record;
  while (reader.next(record)) {
    const TaggedWords* tags = options.annotations ? options.annotations->find(record.sample_id) : nullptr;
    TermSet nouns;
    try {
      nouns = extract_concept_nouns(record.caption, lexicons, tags);
    } catch (const Error& e) {
      throw Error(e.kind(), shard.string() + ":" + std::to_string(reader.line_number()) +
                                ": sample " + std::to_string(record.sample_id) + ": " + e.what());
    }
    builder.add(nouns);
    partial.sample_ids.push_back(record.sample_id);
  }
  partial.index = std::move(builder).finish();
  return partial;
}

void check_unique_sample_ids(const CorpusManifest& manifest, const std::vector<ShardPartial>& partials) {
  std::vector<std::pair<std::uint64_t, std::uint32_t>> ids;
  for (std::uint32_t s = 0; s < partials.size(); ++s) {
    for (auto id : partials[s].sample_ids) ids.emplace_back(id, s);
  }
  std::sort(ids.begin(), ids.end());
  auto dup = std::adjacent_find(ids.begin(), ids.end(),
                                [](const auto& a, const auto& b) { return a.first == b.first; });
  if (dup != ids.end()) {
    throw_duplicate_sample(dup->first, manifest.shard_paths[dup->second],
                           manifest.shard_paths[std::next(dup)->second]);
  }
}

}  // namespace

TextIndex build_text_index(const CorpusManifest& manifest, const IndexBuildOptions& options) {
  const Lexicons& lexicons = options.lexicons ? *options.lexicons : Lexicons::builtin();
  const std::size_t shard_count = manifest.shard_paths.size();
  std::vector<ShardPartial> partials(shard_count);
  std::vector<std::exception_ptr> errors(shard_count);
  std::atomic<std::size_t> next_shard{0};

  auto work = [&] {
    for (std::size_t s = next_shard++; s < shard_count; s = next_shard++) {
      try {
        partials[s] = index_shard(manifest.shard_paths[s], options, lexicons);
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(shard_count)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  check_unique_sample_ids(manifest, partials);

  TextIndex index;
  index.corpus_name = manifest.corpus_name;
  index.pipeline_fingerprint = lexicons.fingerprint();
  std::uint64_t offset = 0;
  for (auto& partial : partials) {
    if (offset + partial.index.sample_count > std::numeric_limits<SampleIndex>::max()) {
      throw Error(ErrorKind::invalid_input, "corpus exceeds the 32-bit sample index space");
    }
    for (auto& [term, list] : partial.index.vocabulary) {
      auto it = index.vocabulary.find(std::string_view(term));
      if (it == index.vocabulary.end()) it = index.vocabulary.emplace(term, PostingList{}).first;
      for (SampleIndex local : list) it->second.append(static_cast<SampleIndex>(local + offset));
    }
    offset += partial.index.sample_count;
    partial = ShardPartial{};
  }
  index.sample_count = offset;
  return index;
}

TextIndex build_text_index(std::string_view corpus_name, std::span<const std::string> captions,
                           const Lexicons& lexicons) {
  TextIndexBuilder builder(std::string(corpus_name), lexicons.fingerprint());
  for (const auto& caption : captions) builder.add(extract_concept_nouns(caption, lexicons));
  return std::move(builder).finish();
}

FrequencyHits text_frequency(const TextIndex& index, const Concept& query) {
  if (query.unigrams.empty()) throw Error(ErrorKind::invalid_input, "concept has no unigrams");
  std::vector<std::span<const SampleIndex>> lists;
  lists.reserve(query.unigrams.size());
  for (const auto& unigram : query.unigrams) {
    const PostingList* list = index.find(unigram);
    if (!list) return {};
    lists.push_back(list->indices());
  }
  FrequencyHits out;
  if (lists.size() == 1) {
    out.hits = *index.find(query.unigrams.front());
  } else {
    out.hits = intersect(lists);
  }
  out.count = out.hits.size();
  return out;
}

bool contains_phrase(std::span<const std::string> caption_tokens, std::span<const std::string> phrase_tokens) {
  if (phrase_tokens.empty()) return false;
  return std::search(caption_tokens.begin(), caption_tokens.end(), phrase_tokens.begin(),
                     phrase_tokens.end()) != caption_tokens.end();
}

std::uint64_t exact_phrase_count(const CorpusManifest& manifest, std::string_view phrase,
                                 StreamOptions options) {
  const auto phrase_tokens = tokenize_words(phrase);
  if (phrase_tokens.empty()) throw Error(ErrorKind::invalid_input, "phrase has no word tokens");
  std::uint64_t count = 0;
  for_each_sample(manifest, options, [&](const SampleRecord& record) {
    if (contains_phrase(tokenize_words(record.caption), phrase_tokens)) ++count;
  });
  return count;
}

void save_index(const TextIndex& index, const fs::path& path) {
  cfix::Writer w(cfix::kTextSection);
  w.str(index.corpus_name);
  w.u64(index.sample_count);
  w.str(index.pipeline_fingerprint);
  const auto terms = index.sorted_terms();
  w.varint(terms.size());
  for (const auto& term : terms) w.str(term);
  for (const auto& term : terms) w.postings(index.find(term)->indices());
  w.finish(path);
}

TextIndex load_index(const fs::path& path) {
  cfix::Reader r(path, cfix::kTextSection);
  TextIndex index;
  index.corpus_name = r.str();
  index.sample_count = r.u64();
  index.pipeline_fingerprint = r.str();
  const std::uint64_t term_count = r.varint();
  std::vector<std::string> terms;
  for (std::uint64_t i = 0; i < term_count; ++i) {
    terms.push_back(r.str());
    if (i > 0 && !(terms[i - 1] < terms[i])) {
      throw Error(ErrorKind::integrity, path.string() + ": vocabulary not sorted");
    }
  }
  index.vocabulary.reserve(terms.size());
  for (auto& term : terms) index.vocabulary.emplace(std::move(term), PostingList(r.postings(index.sample_count)));
  r.expect_end();
  return index;
}

void write_text_frequency_csv(const fs::path& path, const TextIndex& index, std::span<const Concept> concepts) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "concept,text_count\n";
  for (const auto& c : concepts) out << csv_field(c.name) << ',' << text_frequency(index, c).count << '\n';
  if (!out) throw Error(ErrorKind::io, "write failure on " + path.string());
}

}  // namespace conceptscope
