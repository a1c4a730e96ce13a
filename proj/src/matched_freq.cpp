#include "conceptscope/matched_freq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "conceptscope/csv.hpp"
#include "conceptscope/error.hpp"
#include "conceptscope/trend_stats.hpp"
#include "conceptscope/unicode.hpp"

namespace conceptscope {

namespace fs = std::filesystem;

std::string_view to_string(FrequencyField field) noexcept {
  switch (field) {
    case FrequencyField::text: return "text";
    case FrequencyField::image: return "image";
    case FrequencyField::matched: return "matched";
  }
  return "unknown";
}

FrequencyField parse_frequency_field(std::string_view name) {
  if (name == "text") return FrequencyField::text;
  if (name == "image") return FrequencyField::image;
  if (name == "matched") return FrequencyField::matched;
  throw Error(ErrorKind::invalid_input, "unknown frequency field '" + std::string(name) + "'");
}

std::optional<std::uint64_t> FrequencyRecord::get(FrequencyField field) const noexcept {
  switch (field) {
    case FrequencyField::text: return text_count;
    case FrequencyField::image: return image_count;
    case FrequencyField::matched: return matched_count;
  }
  return std::nullopt;
}

FrequencyHits matched_frequency(const PostingList& text_hits, const PostingList& image_hits) {
  FrequencyHits out;
  out.hits = intersect(text_hits, image_hits);
  out.count = out.hits.size();
  return out;
}

std::vector<FrequencyRecord> frequency_table(const TextIndex& text_index, const ImageIndex* image_index,
                                             std::span<const Concept> concepts) {
  if (image_index && (image_index->sample_count != text_index.sample_count ||
                      image_index->corpus_name != text_index.corpus_name)) {
    throw Error(ErrorKind::mismatch, "corpus mismatch: text index '" + text_index.corpus_name + "' (" +
                                         std::to_string(text_index.sample_count) + " samples) vs image index '" +
                                         image_index->corpus_name + "' (" +
                                         std::to_string(image_index->sample_count) + " samples)");
  }
  std::vector<FrequencyRecord> records;
  records.reserve(concepts.size());
  for (const auto& c : concepts) {
    FrequencyRecord r;
    r.concept_name = c.name;
    FrequencyHits text = text_frequency(text_index, c);
    r.text_count = text.count;
    if (image_index) {
      FrequencyHits image = image_frequency(*image_index, c);
      r.image_count = image.count;
      r.matched_count = matched_frequency(text.hits, image.hits).count;
    }
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

std::string optional_count(const std::optional<std::uint64_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

std::optional<std::uint64_t> parse_optional_count(const CsvReader& reader, const std::string& field) {
  if (trim(field).empty()) return std::nullopt;
  std::uint64_t v = 0;
  if (!parse_uint64(field, v)) throw Error(ErrorKind::parse, reader.where() + "bad count '" + field + "'");
  return v;
}

}  // namespace

void write_frequency_csv(const fs::path& path, std::span<const FrequencyRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "concept,text_count,image_count,matched_count\n";
  for (const auto& r : records) {
    out << csv_field(r.concept_name) << ',' << r.text_count << ',' << optional_count(r.image_count) << ','
        << optional_count(r.matched_count) << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write failure on " + path.string());
}

std::vector<FrequencyRecord> read_frequency_csv(const fs::path& path) {
  CsvReader reader(path, {"concept", "text_count", "image_count", "matched_count"});
  std::vector<FrequencyRecord> records;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    FrequencyRecord r;
    r.concept_name = normalize_concept_name(fields[0]);
    if (!parse_uint64(fields[1], r.text_count)) {
      throw Error(ErrorKind::parse, reader.where() + "bad text_count '" + fields[1] + "'");
    }
    r.image_count = parse_optional_count(reader, fields[2]);
    r.matched_count = parse_optional_count(reader, fields[3]);
    records.push_back(std::move(r));
  }
  return records;
}

std::string format_degree_percent(const MisalignmentReport& report) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", report.degree * 100.0);
  return buf;
}

MisalignmentReport MisalignmentCounter::report(std::string corpus_name) const {
  if (total_ == 0) throw Error(ErrorKind::invalid_input, "misalignment needs at least one pair");
  MisalignmentReport r;
  r.corpus_name = std::move(corpus_name);
  r.total_pairs = total_;
  r.misaligned_pairs = misaligned_;
  r.empty_either_side = empty_either_side_;
  r.degree = static_cast<double>(misaligned_) / static_cast<double>(total_);
  return r;
}

SampleConceptMap SampleConceptMap::invert(std::span<const PostingList> hits_by_concept,
                                          std::uint64_t sample_count) {
  SampleConceptMap map;
  map.offsets_.assign(sample_count + 1, 0);
  for (const auto& hits : hits_by_concept) {
    for (SampleIndex s : hits) {
      if (s >= sample_count) throw Error(ErrorKind::invalid_input, "hit beyond sample_count");
      ++map.offsets_[s + 1];
    }
  }
  for (std::uint64_t s = 0; s < sample_count; ++s) map.offsets_[s + 1] += map.offsets_[s];
  map.ids_.resize(map.offsets_.back());
  std::vector<std::uint64_t> cursor(map.offsets_.begin(), map.offsets_.end() - 1);
  // Concepts are visited in id order, so each sample's ids come out sorted.
  for (std::uint32_t id = 0; id < hits_by_concept.size(); ++id) {
    for (SampleIndex s : hits_by_concept[id]) map.ids_[cursor[s]++] = id;
  }
  return map;
}

std::span<const std::uint32_t> SampleConceptMap::concepts_of(std::uint64_t sample) const {
  return std::span<const std::uint32_t>(ids_).subspan(offsets_[sample], offsets_[sample + 1] - offsets_[sample]);
}

namespace {

TermSet sorted_copy(const TermSet& set) {
  TermSet out = set;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void check_lengths(std::size_t image, std::size_t text) {
  if (image != text) {
    throw Error(ErrorKind::mismatch, "image stream has " + std::to_string(image) + " pairs, text stream has " +
                                         std::to_string(text));
  }
}

std::string join(std::span<const std::string> items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ';';
    out += s;
  }
  return out;
}

}  // namespace

MisalignmentReport misalignment_degree(std::span<const TermSet> image_sets, std::span<const TermSet> text_sets,
                                       std::string corpus_name) {
  check_lengths(image_sets.size(), text_sets.size());
  MisalignmentCounter counter;
  for (std::size_t i = 0; i < image_sets.size(); ++i) {
    counter.add(sorted_copy(image_sets[i]), sorted_copy(text_sets[i]));
  }
  return counter.report(std::move(corpus_name));
}

MisalignmentReport misalignment_degree(const SampleConceptMap& image, const SampleConceptMap& text,
                                       std::string corpus_name) {
  check_lengths(image.sample_count(), text.sample_count());
  MisalignmentCounter counter;
  for (std::uint64_t s = 0; s < image.sample_count(); ++s) counter.add(image.concepts_of(s), text.concepts_of(s));
  return counter.report(std::move(corpus_name));
}

std::uint64_t export_misaligned(const fs::path& path, std::span<const std::uint64_t> sample_ids,
                                std::span<const TermSet> image_sets, std::span<const TermSet> text_sets) {
  check_lengths(image_sets.size(), text_sets.size());
  check_lengths(sample_ids.size(), text_sets.size());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "sample_id,image_concepts,text_concepts\n";
  std::uint64_t rows = 0;
  for (std::size_t i = 0; i < image_sets.size(); ++i) {
    TermSet img = sorted_copy(image_sets[i]);
    TermSet txt = sorted_copy(text_sets[i]);
    if (sorted_ranges_intersect(img, txt)) continue;
    out << sample_ids[i] << ',' << csv_field(join(img)) << ',' << csv_field(join(txt)) << '\n';
    ++rows;
  }
  if (!out) throw Error(ErrorKind::io, "write failure on " + path.string());
  return rows;
}

std::uint64_t export_misaligned(const fs::path& path, std::span<const std::uint64_t> sample_ids,
                                const SampleConceptMap& image, const SampleConceptMap& text,
                                std::span<const std::string> concept_names) {
  check_lengths(image.sample_count(), text.sample_count());
  check_lengths(sample_ids.size(), text.sample_count());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "sample_id,image_concepts,text_concepts\n";
  auto names_of = [&](std::span<const std::uint32_t> ids) {
    std::vector<std::string> names;
    for (auto id : ids) names.push_back(concept_names[id]);
    std::sort(names.begin(), names.end());
    return join(names);
  };
  std::uint64_t rows = 0;
  for (std::uint64_t s = 0; s < image.sample_count(); ++s) {
    auto img = image.concepts_of(s);
    auto txt = text.concepts_of(s);
    if (sorted_ranges_intersect(img, txt)) continue;
    out << sample_ids[s] << ',' << csv_field(names_of(img)) << ',' << csv_field(names_of(txt)) << '\n';
    ++rows;
  }
  if (!out) throw Error(ErrorKind::io, "write failure on " + path.string());
  return rows;
}

CorrelationMatrix cross_corpus_correlation(std::span<const CorpusFrequencies> tables, FrequencyField field) {
  if (tables.size() < 2) throw Error(ErrorKind::invalid_input, "correlation needs at least two corpora");
  const auto& reference = tables.front().records;
  std::vector<std::vector<double>> logs;
  for (const auto& table : tables) {
    if (table.records.size() != reference.size()) {
      throw Error(ErrorKind::mismatch, "concept-set mismatch: '" + table.corpus_name + "' lists " +
                                           std::to_string(table.records.size()) + " concepts, expected " +
                                           std::to_string(reference.size()));
    }
    std::vector<double> v;
    v.reserve(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) {
      const auto& r = table.records[i];
      if (r.concept_name != reference[i].concept_name) {
        throw Error(ErrorKind::mismatch, "concept-set mismatch at row " + std::to_string(i) + ": '" +
                                             r.concept_name + "' vs '" + reference[i].concept_name + "'");
      }
      auto count = r.get(field);
      if (!count) {
        throw Error(ErrorKind::invalid_input, "corpus '" + table.corpus_name + "' has no " +
                                                  std::string(to_string(field)) + " counts");
      }
      v.push_back(std::log10(static_cast<double>(*count) + 1.0));
    }
    logs.push_back(std::move(v));
  }
  CorrelationMatrix m;
  m.field = field;
  const std::size_t n = tables.size();
  m.values.assign(n, std::vector<double>(n, 1.0));
  for (const auto& t : tables) m.corpora.push_back(t.corpus_name);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double rho = pearson_rho(logs[i], logs[j]);
      m.values[i][j] = rho;
      m.values[j][i] = rho;
    }
  }
  return m;
}

}  // namespace conceptscope
