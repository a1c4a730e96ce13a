#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "conceptscope/inverted_index.hpp"

namespace conceptscope {

/// One open-set tagger score for a (sample, concept) pair.
struct TagRecord {
  std::uint64_t sample_index = 0;
  std::string concept_name;
  double score = 0.0;
};

inline constexpr double kDefaultTagThreshold = 0.7;

/// Concept -> samples whose image was tagged with it at `threshold_used`.
struct ImageIndex {
  std::string corpus_name;
  std::uint64_t sample_count = 0;
  double threshold_used = kDefaultTagThreshold;
  PostingMap concepts;

  const PostingList* find(std::string_view concept_name) const;
  std::vector<std::string> sorted_concepts() const;

  bool operator==(const ImageIndex&) const = default;
};

/// Binarizes scores: a sample enters a concept's list iff score >= threshold.
/// Duplicate (sample, concept) records count by their maximum score; record
/// order does not matter.
class ImageIndexBuilder {
 public:
  ImageIndexBuilder(std::string corpus_name, std::uint64_t sample_count, double threshold);

  void add(const TagRecord& record);
  ImageIndex finish() &&;

 private:
  ImageIndex index_;
  std::unordered_map<std::string, std::vector<SampleIndex>, StringHash, std::equal_to<>> pending_;
};

ImageIndex build_image_index(std::span<const TagRecord> records, double threshold, std::uint64_t sample_count,
                             std::string corpus_name = {});

/// Streams a `sample_index,concept,score` CSV. Concept names are normalized.
void for_each_tag_record(const std::filesystem::path& path, const std::function<void(const TagRecord&)>& fn);
std::vector<TagRecord> load_tag_records(const std::filesystem::path& path);

/// Ingests several tag shards into one index.
ImageIndex build_image_index(std::span<const std::filesystem::path> tag_files, double threshold,
                             std::uint64_t sample_count, std::string corpus_name = {});

/// Lookup by the concept's normalized name; absent concepts have no hits.
FrequencyHits image_frequency(const ImageIndex& index, const Concept& query);

void save_image_index(const ImageIndex& index, const std::filesystem::path& path);
ImageIndex load_image_index(const std::filesystem::path& path);

}  // namespace conceptscope
