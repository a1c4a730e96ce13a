#pragma once

#include <cstdint>
#include <filesystem>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conceptscope/image_tags.hpp"
#include "conceptscope/inverted_index.hpp"

namespace conceptscope {

enum class FrequencyField { text, image, matched };

std::string_view to_string(FrequencyField field) noexcept;
FrequencyField parse_frequency_field(std::string_view name);

/// Per-concept counts for one corpus. Image and matched counts are absent in
/// text-only mode.
struct FrequencyRecord {
  std::string concept_name;
  std::uint64_t text_count = 0;
  std::optional<std::uint64_t> image_count;
  std::optional<std::uint64_t> matched_count;

  std::optional<std::uint64_t> get(FrequencyField field) const noexcept;

  bool operator==(const FrequencyRecord&) const = default;
};

/// Samples hit in both modalities.
FrequencyHits matched_frequency(const PostingList& text_hits, const PostingList& image_hits);

/// One record per concept, in input order. `image_index` may be null for
/// text-only counts. Indices over different corpora are rejected.
std::vector<FrequencyRecord> frequency_table(const TextIndex& text_index, const ImageIndex* image_index,
                                             std::span<const Concept> concepts);

/// `concept,text_count,image_count,matched_count`; absent counts are empty.
void write_frequency_csv(const std::filesystem::path& path, std::span<const FrequencyRecord> records);
std::vector<FrequencyRecord> read_frequency_csv(const std::filesystem::path& path);

struct MisalignmentReport {
  std::string corpus_name;
  std::uint64_t total_pairs = 0;
  std::uint64_t misaligned_pairs = 0;
  std::uint64_t empty_either_side = 0;  // misaligned pairs with an empty image or text set
  double degree = 0.0;                  // misaligned_pairs / total_pairs
};

/// Degree as a percentage with two decimals, e.g. "16.81%".
std::string format_degree_percent(const MisalignmentReport& report);

/// Sorted-range intersection test with early exit.
template <typename RangeA, typename RangeB>
bool sorted_ranges_intersect(const RangeA& a, const RangeB& b) {
  auto ia = std::begin(a), ea = std::end(a);
  auto ib = std::begin(b), eb = std::end(b);
  while (ia != ea && ib != eb) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      return true;
    }
  }
  return false;
}

/// Running count over aligned (image concepts, text concepts) pairs. A pair
/// is misaligned iff the two sorted sets share nothing, which includes the
/// case where either (or both) is empty.
class MisalignmentCounter {
 public:
  template <typename ImageSet, typename TextSet>
  bool add(const ImageSet& image_concepts, const TextSet& text_concepts) {
    ++total_;
    if (sorted_ranges_intersect(image_concepts, text_concepts)) return false;
    ++misaligned_;
    if (std::empty(image_concepts) || std::empty(text_concepts)) ++empty_either_side_;
    return true;
  }

  MisalignmentReport report(std::string corpus_name) const;

 private:
  std::uint64_t total_ = 0;
  std::uint64_t misaligned_ = 0;
  std::uint64_t empty_either_side_ = 0;
};

/// Sample -> sorted concept ids, built by inverting per-concept hit lists.
class SampleConceptMap {
 public:
  static SampleConceptMap invert(std::span<const PostingList> hits_by_concept, std::uint64_t sample_count);

  std::span<const std::uint32_t> concepts_of(std::uint64_t sample) const;
  std::uint64_t sample_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> ids_;
};

MisalignmentReport misalignment_degree(std::span<const TermSet> image_sets, std::span<const TermSet> text_sets,
                                       std::string corpus_name = {});
MisalignmentReport misalignment_degree(const SampleConceptMap& image, const SampleConceptMap& text,
                                       std::string corpus_name = {});

/// Writes `sample_id,image_concepts,text_concepts` (sets joined with ';') for
/// every misaligned pair; returns the number of rows.
std::uint64_t export_misaligned(const std::filesystem::path& path, std::span<const std::uint64_t> sample_ids,
                                std::span<const TermSet> image_sets, std::span<const TermSet> text_sets);
std::uint64_t export_misaligned(const std::filesystem::path& path, std::span<const std::uint64_t> sample_ids,
                                const SampleConceptMap& image, const SampleConceptMap& text,
                                std::span<const std::string> concept_names);

struct CorpusFrequencies {
  std::string corpus_name;
  std::vector<FrequencyRecord> records;
};

struct CorrelationMatrix {
  std::vector<std::string> corpora;
  FrequencyField field = FrequencyField::matched;
  std::vector<std::vector<double>> values;
};

/// Pearson correlation of log10(count + 1) between every pair of corpora.
/// Tables must list the same concepts in the same order.
CorrelationMatrix cross_corpus_correlation(std::span<const CorpusFrequencies> tables, FrequencyField field);

}  // namespace conceptscope
