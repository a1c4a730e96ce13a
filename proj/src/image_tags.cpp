#include "conceptscope/image_tags.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfix.hpp"
#include "conceptscope/csv.hpp"
#include "conceptscope/error.hpp"
#include "conceptscope/unicode.hpp"

namespace conceptscope {

namespace {

void check_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::invalid_input, "threshold must be within [0,1], got " + std::to_string(threshold));
  }
}

}  // namespace

const PostingList* ImageIndex::find(std::string_view concept_name) const {
  auto it = concepts.find(concept_name);
  return it == concepts.end() ? nullptr : &it->second;
}

std::vector<std::string> ImageIndex::sorted_concepts() const {
  std::vector<std::string> names;
  names.reserve(concepts.size());
  for (const auto& [name, list] : concepts) names.push_back(name);
  std::sort(names.begin(), names.end());
  return names;
}

ImageIndexBuilder::ImageIndexBuilder(std::string corpus_name, std::uint64_t sample_count, double threshold) {
  check_threshold(threshold);
  if (sample_count > std::uint64_t{std::numeric_limits<SampleIndex>::max()} + 1) {
    throw Error(ErrorKind::invalid_input, "corpus exceeds the 32-bit sample index space");
  }
  index_.corpus_name = std::move(corpus_name);
  index_.sample_count = sample_count;
  index_.threshold_used = threshold;
}

void ImageIndexBuilder::add(const TagRecord& record) {
  if (record.sample_index >= index_.sample_count) {
    throw Error(ErrorKind::invalid_input, "tag sample_index " + std::to_string(record.sample_index) +
                                              " out of range for " + std::to_string(index_.sample_count) +
                                              " samples");
  }
  if (!std::isfinite(record.score) || record.score < 0.0 || record.score > 1.0) {
    throw Error(ErrorKind::invalid_input, "tag score " + std::to_string(record.score) + " outside [0,1]");
  }
  if (record.score < index_.threshold_used) return;
  auto it = pending_.find(std::string_view(record.concept_name));
  if (it == pending_.end()) it = pending_.emplace(record.concept_name, std::vector<SampleIndex>{}).first;
  it->second.push_back(static_cast<SampleIndex>(record.sample_index));
}

ImageIndex ImageIndexBuilder::finish() && {
  for (auto& [name, indices] : pending_) {
    index_.concepts.emplace(name, PostingList::from_unsorted(std::move(indices)));
  }
  pending_.clear();
  return std::move(index_);
}

ImageIndex build_image_index(std::span<const TagRecord> records, double threshold, std::uint64_t sample_count,
                             std::string corpus_name) {
  ImageIndexBuilder builder(std::move(corpus_name), sample_count, threshold);
  for (const auto& r : records) {
    TagRecord normalized = r;
    normalized.concept_name = normalize_concept_name(r.concept_name);
    builder.add(normalized);
  }
  return std::move(builder).finish();
}

void for_each_tag_record(const std::filesystem::path& path, const std::function<void(const TagRecord&)>& fn) {
  CsvReader reader(path, {"sample_index", "concept", "score"});
  std::vector<std::string> fields;
  TagRecord record;
  while (reader.next(fields)) {
    if (!parse_uint64(fields[0], record.sample_index)) {
      throw Error(ErrorKind::parse, reader.where() + "bad sample_index '" + fields[0] + "'");
    }
    record.concept_name = normalize_concept_name(fields[1]);
    if (record.concept_name.empty()) throw Error(ErrorKind::parse, reader.where() + "empty concept");
    if (!parse_finite_double(fields[2], record.score)) {
      throw Error(ErrorKind::parse, reader.where() + "bad score '" + fields[2] + "'");
    }
    try {
      fn(record);
    } catch (const Error& e) {
      throw Error(e.kind(), reader.where() + e.what());
    }
  }
}

std::vector<TagRecord> load_tag_records(const std::filesystem::path& path) {
  std::vector<TagRecord> out;
  for_each_tag_record(path, [&](const TagRecord& r) { out.push_back(r); });
  return out;
}

ImageIndex build_image_index(std::span<const std::filesystem::path> tag_files, double threshold,
                             std::uint64_t sample_count, std::string corpus_name) {
  ImageIndexBuilder builder(std::move(corpus_name), sample_count, threshold);
  for (const auto& file : tag_files) {
    for_each_tag_record(file, [&](const TagRecord& r) { builder.add(r); });
  }
  return std::move(builder).finish();
}

FrequencyHits image_frequency(const ImageIndex& index, const Concept& query) {
  const PostingList* list = index.find(query.name);
  if (!list) return {};
  return FrequencyHits{list->size(), *list};
}

void save_image_index(const ImageIndex& index, const std::filesystem::path& path) {
  cfix::Writer w(cfix::kImageSection);
  w.str(index.corpus_name);
  w.u64(index.sample_count);
  w.f64(index.threshold_used);
  const auto names = index.sorted_concepts();
  w.varint(names.size());
  for (const auto& name : names) w.str(name);
  for (const auto& name : names) w.postings(index.find(name)->indices());
  w.finish(path);
}

ImageIndex load_image_index(const std::filesystem::path& path) {
  cfix::Reader r(path, cfix::kImageSection);
  ImageIndex index;
  index.corpus_name = r.str();
  index.sample_count = r.u64();
  index.threshold_used = r.f64();
  const std::uint64_t count = r.varint();
  std::vector<std::string> names;
  for (std::uint64_t i = 0; i < count; ++i) {
    names.push_back(r.str());
    if (i > 0 && !(names[i - 1] < names[i])) {
      throw Error(ErrorKind::integrity, path.string() + ": concept block not sorted");
    }
  }
  for (auto& name : names) index.concepts.emplace(std::move(name), PostingList(r.postings(index.sample_count)));
  r.expect_end();
  return index;
}

}  // namespace conceptscope
