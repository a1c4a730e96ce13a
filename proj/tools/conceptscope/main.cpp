// conceptscope: concept frequency analysis over image-text corpora.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "conceptscope/corpus_io.hpp"
#include "conceptscope/curation.hpp"
#include "conceptscope/digest.hpp"
#include "conceptscope/error.hpp"
#include "conceptscope/image_tags.hpp"
#include "conceptscope/inverted_index.hpp"
#include "conceptscope/matched_freq.hpp"
#include "conceptscope/text_pipeline.hpp"
#include "conceptscope/trend_stats.hpp"

#ifndef CONCEPTSCOPE_VERSION
#define CONCEPTSCOPE_VERSION "0.0.0"
#endif

namespace cs = conceptscope;
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reproducibility header shared by every report.
class Report {
 public:
  Report(std::string command, std::string fingerprint) {
    doc_["tool"] = "conceptscope";
    doc_["version"] = CONCEPTSCOPE_VERSION;
    doc_["command"] = std::move(command);
    doc_["pipeline_fingerprint"] = std::move(fingerprint);
    doc_["config"] = ordered_json::object();
    doc_["inputs"] = ordered_json::object();
  }

  ordered_json& config() { return doc_["config"]; }
  ordered_json& operator[](const char* key) { return doc_[key]; }

  void input(const fs::path& path) { doc_["inputs"][path.string()] = cs::file_digest(path); }

  void input_corpus(const fs::path& manifest_path, const cs::CorpusManifest& manifest) {
    input(manifest_path);
    for (const auto& shard : manifest.shard_paths) input(shard);
  }

  void emit(const std::optional<fs::path>& out) const {
    const std::string text = doc_.dump(2);
    std::cout << text << '\n';
    if (out) {
      std::ofstream f(*out);
      if (!f) throw cs::Error(cs::ErrorKind::io, "cannot write " + out->string());
      f << text << '\n';
    }
  }

 private:
  ordered_json doc_;
};

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

ordered_json correlation_json(const cs::CorrelationReport& r) {
  return {{"n", r.n},         {"rho", r.rho},         {"p_value", r.p_value},
          {"slope", r.slope}, {"intercept", r.intercept}, {"significant", r.significant}};
}

cs::FrequencyField resolve_field(const std::string& requested, std::span<const cs::FrequencyRecord> records) {
  if (!requested.empty()) return cs::parse_frequency_field(requested);
  const bool has_matched = !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) {
    return r.matched_count.has_value();
  });
  return has_matched ? cs::FrequencyField::matched : cs::FrequencyField::text;
}

unsigned default_workers() {
  if (const char* env = std::getenv("CONCEPTSCOPE_WORKERS"); env && *env) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw cs::Error(cs::ErrorKind::invalid_input, std::string("CONCEPTSCOPE_WORKERS must be a positive integer, got '") +
                                                      env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

cs::ImageIndex image_side(const std::vector<std::string>& tag_files, const std::string& image_index_path,
                          double threshold, const cs::TextIndex& text, Report& report) {
  if (!image_index_path.empty()) {
    report.input(image_index_path);
    return cs::load_image_index(image_index_path);
  }
  std::vector<fs::path> files(tag_files.begin(), tag_files.end());
  for (const auto& f : files) report.input(f);
  return cs::build_image_index(files, threshold, text.sample_count, text.corpus_name);
}

// --- index ------------------------------------------------------------------

struct IndexArgs {
  std::string corpus, out, annotations;
  unsigned workers = 1;
  bool lenient = false;
};

void cmd_index(const IndexArgs& a) {
  const auto manifest = cs::open_corpus(a.corpus);
  std::optional<cs::TaggerAnnotations> annotations;
  if (!a.annotations.empty()) annotations = cs::TaggerAnnotations::load(a.annotations);

  cs::IndexBuildOptions opts;
  opts.workers = a.workers;
  opts.stream.lenient = a.lenient;
  opts.annotations = annotations ? &*annotations : nullptr;
  const auto index = cs::build_text_index(manifest, opts);
  if (index.sample_count == 0) {
    std::cerr << "warning: corpus '" << manifest.corpus_name << "' has no samples; writing an empty index\n";
  }
  cs::save_index(index, a.out);

  Report report("index", index.pipeline_fingerprint);
  report.config() = {{"corpus", a.corpus},
                     {"out", a.out},
                     {"annotations", a.annotations.empty() ? json(nullptr) : json(a.annotations)},
                     {"workers", a.workers},
                     {"lenient", a.lenient}};
  report.input_corpus(a.corpus, manifest);
  if (annotations) report.input(a.annotations);
  report["corpus"] = index.corpus_name;
  report["sample_count"] = index.sample_count;
  report["vocabulary_size"] = index.vocabulary.size();
  report["total_postings"] = index.total_postings();
  report["index_digest"] = cs::file_digest(a.out);
  report.emit(std::nullopt);
}

// --- image-index ------------------------------------------------------------

struct ImageIndexArgs {
  std::vector<std::string> tags;
  std::string index, out;
  double threshold = cs::kDefaultTagThreshold;
};

void cmd_image_index(const ImageIndexArgs& a) {
  const auto text = cs::load_index(a.index);
  Report report("image-index", text.pipeline_fingerprint);
  report.config() = {{"tags", a.tags}, {"index", a.index}, {"threshold", a.threshold}, {"out", a.out}};
  report.input(a.index);
  const auto image = image_side(a.tags, "", a.threshold, text, report);
  cs::save_image_index(image, a.out);
  report["corpus"] = image.corpus_name;
  report["sample_count"] = image.sample_count;
  report["concepts"] = image.concepts.size();
  report.emit(std::nullopt);
}

// --- frequency --------------------------------------------------------------

struct FrequencyArgs {
  std::string index, concepts, image_index, out;
  std::vector<std::string> tags;
  double threshold = cs::kDefaultTagThreshold;
};

void cmd_frequency(const FrequencyArgs& a) {
  const auto text = cs::load_index(a.index);
  const auto concepts = cs::load_concepts(a.concepts);
  Report report("frequency", text.pipeline_fingerprint);
  const bool text_only = a.tags.empty() && a.image_index.empty();
  report.config() = {{"index", a.index},
                     {"concepts", a.concepts},
                     {"tags", a.tags},
                     {"image_index", a.image_index.empty() ? json(nullptr) : json(a.image_index)},
                     {"threshold", a.threshold},
                     {"out", a.out},
                     {"mode", text_only ? "text-only" : "matched"}};
  report.input(a.index);
  report.input(a.concepts);
  std::optional<cs::ImageIndex> image;
  if (!text_only) image = image_side(a.tags, a.image_index, a.threshold, text, report);
  if (image && !a.image_index.empty()) report.config()["threshold"] = image->threshold_used;

  const auto records = cs::frequency_table(text, image ? &*image : nullptr, concepts);
  cs::write_frequency_csv(a.out, records);
  std::uint64_t zero_text = 0, zero_matched = 0;
  for (const auto& r : records) {
    zero_text += r.text_count == 0;
    zero_matched += r.matched_count && *r.matched_count == 0;
  }
  report["corpus"] = text.corpus_name;
  report["sample_count"] = text.sample_count;
  report["concepts"] = records.size();
  report["zero_text_count"] = zero_text;
  if (image) report["zero_matched_count"] = zero_matched;
  report.emit(std::nullopt);
}

// --- misalignment -----------------------------------------------------------

struct MisalignmentArgs {
  std::string corpus, index, image_index, concepts, export_path, out;
  std::vector<std::string> tags;
  double threshold = cs::kDefaultTagThreshold;
  bool lenient = false;
};

void cmd_misalignment(const MisalignmentArgs& a) {
  const auto manifest = cs::open_corpus(a.corpus);
  const auto text = cs::load_index(a.index);
  const auto concepts = cs::load_concepts(a.concepts);
  Report report("misalignment", text.pipeline_fingerprint);
  report.config() = {{"corpus", a.corpus},
                     {"index", a.index},
                     {"tags", a.tags},
                     {"image_index", a.image_index.empty() ? json(nullptr) : json(a.image_index)},
                     {"threshold", a.threshold},
                     {"concepts", a.concepts},
                     {"export", a.export_path.empty() ? json(nullptr) : json(a.export_path)},
                     {"lenient", a.lenient}};
  report.input_corpus(a.corpus, manifest);
  report.input(a.index);
  report.input(a.concepts);
  const auto image = image_side(a.tags, a.image_index, a.threshold, text, report);
  if (image.sample_count != text.sample_count || image.corpus_name != text.corpus_name) {
    throw cs::Error(cs::ErrorKind::mismatch, "image index '" + image.corpus_name + "' (" +
                                                 std::to_string(image.sample_count) +
                                                 " samples) does not cover text index '" + text.corpus_name + "' (" +
                                                 std::to_string(text.sample_count) + " samples)");
  }

  std::vector<std::uint64_t> sample_ids;
  cs::for_each_sample(manifest, cs::StreamOptions{a.lenient},
                      [&](const cs::SampleRecord& r) { sample_ids.push_back(r.sample_id); });
  if (sample_ids.size() != text.sample_count) {
    throw cs::Error(cs::ErrorKind::mismatch, "corpus streams " + std::to_string(sample_ids.size()) +
                                                 " samples but the text index holds " +
                                                 std::to_string(text.sample_count));
  }

  std::vector<cs::PostingList> text_hits, image_hits;
  std::vector<std::string> names;
  for (const auto& c : concepts) {
    text_hits.push_back(cs::text_frequency(text, c).hits);
    image_hits.push_back(cs::image_frequency(image, c).hits);
    names.push_back(c.name);
  }
  const auto text_map = cs::SampleConceptMap::invert(text_hits, text.sample_count);
  const auto image_map = cs::SampleConceptMap::invert(image_hits, text.sample_count);
  const auto result = cs::misalignment_degree(image_map, text_map, text.corpus_name);

  report["corpus"] = result.corpus_name;
  report["total_pairs"] = result.total_pairs;
  report["misaligned_pairs"] = result.misaligned_pairs;
  report["empty_either_side"] = result.empty_either_side;
  report["degree"] = result.degree;
  report["degree_percent"] = cs::format_degree_percent(result);
  if (!a.export_path.empty()) {
    report["exported_rows"] = cs::export_misaligned(a.export_path, sample_ids, image_map, text_map, names);
  }
  report.emit(opt_path(a.out));
}

// --- trend ------------------------------------------------------------------

struct TrendArgs {
  std::string frequency, performance, field, out;
  std::size_t bins = cs::kDefaultBinCount;
};

void cmd_trend(const TrendArgs& a) {
  const auto records = cs::read_frequency_csv(a.frequency);
  const auto perf = cs::load_performance(a.performance);
  const auto field = resolve_field(a.field, records);
  Report report("trend", "");
  report.config() = {{"frequency", a.frequency},
                     {"performance", a.performance},
                     {"field", cs::to_string(field)},
                     {"bins", a.bins}};
  report.input(a.frequency);
  report.input(a.performance);

  std::vector<cs::TrendPoint> points;
  std::vector<std::string> unmatched;
  for (const auto& r : records) {
    auto score = perf.find(r.concept_name);
    auto count = r.get(field);
    if (!count) {
      throw cs::Error(cs::ErrorKind::invalid_input,
                      a.frequency + ": concept '" + r.concept_name + "' has no " + std::string(cs::to_string(field)) +
                          " count");
    }
    if (!score) {
      unmatched.push_back(r.concept_name);
      continue;
    }
    points.push_back({r.concept_name, *count, *score});
  }
  report["concepts_fitted"] = points.size();
  report["unmatched_concepts"] = unmatched;

  std::uint64_t zero_frequency = 0;
  std::vector<double> positive_perf;
  for (const auto& p : points) {
    if (p.frequency == 0) {
      ++zero_frequency;
    } else {
      positive_perf.push_back(p.performance);
    }
  }
  report["dropped_zero_frequency"] = zero_frequency;
  const bool flat = !positive_perf.empty() && std::all_of(positive_perf.begin(), positive_perf.end(), [&](double v) {
    return v == positive_perf.front();
  });
  if (flat) {
    cs::CorrelationReport none;
    none.n = positive_perf.size();
    none.intercept = positive_perf.front();
    report["binned"] = correlation_json(none);
    report["per_concept"] = correlation_json(none);
    report["note"] = "performance is constant; slope fixed at 0";
    report.emit(opt_path(a.out));
    return;
  }

  const auto fit = cs::fit_log_linear(points, a.bins);
  report["binned"] = correlation_json(fit.binned);
  report["per_concept"] = correlation_json(fit.per_concept);
  ordered_json bins = ordered_json::array();
  for (std::size_t b = 0; b < fit.trend.bin_count(); ++b) {
    bins.push_back({{"log10_lo", fit.trend.bin_edges[b]},
                    {"log10_hi", fit.trend.bin_edges[b + 1]},
                    {"concepts", fit.trend.bin_concept_counts[b]},
                    {"mean_log10_frequency", fit.trend.bin_mean_log_frequency[b]},
                    {"mean_performance", fit.trend.bin_mean_performance[b]},
                    {"pruned", fit.trend.is_pruned(b)}});
  }
  report["bins"] = bins;
  report.emit(opt_path(a.out));
}

// --- tail / correlate -------------------------------------------------------

std::vector<cs::CorpusFrequencies> load_tables(const std::vector<std::string>& files, Report& report) {
  std::vector<cs::CorpusFrequencies> tables;
  for (const auto& f : files) {
    report.input(f);
    tables.push_back({fs::path(f).stem().string(), cs::read_frequency_csv(f)});
  }
  return tables;
}

struct TailArgs {
  std::vector<std::string> frequency;
  std::string field, out;
  std::size_t k = 290;
};

void cmd_tail(const TailArgs& a) {
  Report report("tail", "");
  const auto tables = load_tables(a.frequency, report);
  const auto field = resolve_field(a.field, tables.front().records);
  report.config() = {{"frequency", a.frequency}, {"field", cs::to_string(field)}, {"k", a.k}};

  std::vector<cs::ConceptFrequency> freqs;
  if (tables.size() == 1) {
    for (const auto& r : tables.front().records) {
      auto count = r.get(field);
      if (!count) {
        throw cs::Error(cs::ErrorKind::invalid_input,
                        "concept '" + r.concept_name + "' has no " + std::string(cs::to_string(field)) + " count");
      }
      freqs.push_back({r.concept_name, *count});
    }
  } else {
    freqs = cs::min_across_corpora(tables, field);
  }
  const auto summary = cs::tail_summary(freqs, a.k);
  report["corpora"] = tables.size();
  report["total_concepts"] = summary.total_concepts;
  report["zero_count_concepts"] = summary.zero_count_concepts;
  report["mean_frequency"] = summary.mean_frequency;
  report["fraction_below_mean"] = summary.fraction_below_mean;
  ordered_json bottom = ordered_json::array();
  for (const auto& c : summary.bottom_k) bottom.push_back({{"concept", c.concept_name}, {"frequency", c.frequency}});
  report["bottom_k"] = bottom;
  report.emit(opt_path(a.out));
}

struct CorrelateArgs {
  std::vector<std::string> frequency;
  std::string field, out;
};

void cmd_correlate(const CorrelateArgs& a) {
  Report report("correlate", "");
  const auto tables = load_tables(a.frequency, report);
  const auto field = resolve_field(a.field, tables.front().records);
  report.config() = {{"frequency", a.frequency}, {"field", cs::to_string(field)}};
  const auto m = cs::cross_corpus_correlation(tables, field);
  report["corpora"] = m.corpora;
  report["matrix"] = m.values;
  report.emit(opt_path(a.out));
}

// --- curate -----------------------------------------------------------------

struct CurateArgs {
  std::string pool, embeddings, images_dir, exclude, out;
  std::vector<std::string> fine_grained;
  std::optional<std::size_t> target;
  cs::CurationConfig config;
};

void cmd_curate(const CurateArgs& a) {
  cs::CurationConfig config = a.config;
  config.target_per_class = a.target;
  config.fine_grained_classes = {a.fine_grained.begin(), a.fine_grained.end()};
  config.validate();

  Report report("curate", "");
  std::optional<cs::EmbeddingMatrix> embeddings;
  if (!a.embeddings.empty()) {
    embeddings = cs::load_embeddings(a.embeddings);
    report.input(a.embeddings);
    report.input(a.embeddings + ".json");
  }
  auto pool = cs::load_candidate_pool(a.pool, embeddings ? &*embeddings : nullptr, opt_path(a.images_dir));
  report.input(a.pool);
  std::set<std::string> excluded;
  if (!a.exclude.empty()) {
    excluded = cs::load_exclusions(a.exclude);
    report.input(a.exclude);
  }
  report.config() = {{"pool", a.pool},
                     {"embeddings", a.embeddings.empty() ? json(nullptr) : json(a.embeddings)},
                     {"images_dir", a.images_dir.empty() ? json(nullptr) : json(a.images_dir)},
                     {"exclude", a.exclude.empty() ? json(nullptr) : json(a.exclude)},
                     {"outlier_fraction", config.outlier_fraction},
                     {"dedup_threshold_common", config.dedup_threshold_common},
                     {"dedup_threshold_finegrained", config.dedup_threshold_finegrained},
                     {"phash_hamming_threshold", config.phash_hamming_threshold},
                     {"target_per_class", a.target ? json(*a.target) : json(nullptr)},
                     {"fine_grained_classes", a.fine_grained},
                     {"out", a.out}};

  const auto result = cs::run_curation(std::move(pool), config, excluded);
  ordered_json stages = ordered_json::array();
  for (const auto& s : result.stages) {
    ordered_json per_class = ordered_json::object();
    for (const auto& [cls, counts] : s.per_class) per_class[cls] = {{"kept", counts.kept}, {"removed", counts.removed}};
    stages.push_back(
        {{"stage", s.stage}, {"input", s.input}, {"kept", s.kept}, {"removed", s.removed}, {"per_class", per_class}});
  }
  report["stages"] = stages;
  report["final_count"] = result.final_pool.size();

  std::ofstream out(a.out);
  if (!out) throw cs::Error(cs::ErrorKind::io, "cannot write " + a.out);
  out << "image_id,class_name\n";
  for (const auto& img : result.final_pool) out << img.image_id << ',' << img.class_name << '\n';
  out.close();
  if (!out) throw cs::Error(cs::ErrorKind::io, "write failure on " + a.out);
  report.emit(std::nullopt);
}

// --- cmc --------------------------------------------------------------------

struct CmcArgs {
  std::string queries, query_labels, gallery, gallery_labels, tail_queries, tail_labels, out;
  std::vector<std::size_t> ks{1, 2, 5};
};

cs::RetrievalSet load_retrieval(const std::string& queries, const std::string& query_labels,
                                const CmcArgs& a, Report& report) {
  for (const auto& p : {queries, queries + ".json", query_labels}) report.input(p);
  cs::RetrievalSet set{cs::load_embeddings(queries), cs::load_labels(query_labels), cs::load_embeddings(a.gallery),
                       cs::load_labels(a.gallery_labels)};
  cs::validate(set);
  return set;
}

void cmd_cmc(const CmcArgs& a) {
  Report report("cmc", "");
  report.config() = {{"queries", a.queries},
                     {"query_labels", a.query_labels},
                     {"gallery", a.gallery},
                     {"gallery_labels", a.gallery_labels},
                     {"tail_queries", a.tail_queries.empty() ? json(nullptr) : json(a.tail_queries)},
                     {"tail_labels", a.tail_labels.empty() ? json(nullptr) : json(a.tail_labels)},
                     {"ks", a.ks}};
  for (const auto& p : {a.gallery, a.gallery + ".json", a.gallery_labels}) report.input(p);
  const auto head = load_retrieval(a.queries, a.query_labels, a, report);
  auto curve_json = [&](const std::vector<double>& curve) {
    ordered_json o = ordered_json::object();
    for (std::size_t i = 0; i < a.ks.size(); ++i) o[std::to_string(a.ks[i])] = curve[i];
    return o;
  };
  report["cmc"] = curve_json(cs::cmc_curve(head, a.ks));
  if (!a.tail_queries.empty()) {
    if (a.tail_labels.empty()) throw cs::Error(cs::ErrorKind::invalid_input, "--tail-queries needs --tail-labels");
    const auto tail = load_retrieval(a.tail_queries, a.tail_labels, a, report);
    report["tail_cmc"] = curve_json(cs::cmc_curve(tail, a.ks));
    report["delta_cmc_points"] = curve_json(cs::delta_cmc(head, tail, a.ks));
  }
  report.emit(opt_path(a.out));
}

// --- phrase / concepts ------------------------------------------------------

struct PhraseArgs {
  std::string corpus, phrase;
  bool lenient = false;
};

void cmd_phrase(const PhraseArgs& a) {
  const auto manifest = cs::open_corpus(a.corpus);
  Report report("phrase", cs::Lexicons::builtin().fingerprint());
  report.config() = {{"corpus", a.corpus}, {"phrase", a.phrase}, {"lenient", a.lenient}};
  report.input_corpus(a.corpus, manifest);
  report["count"] = cs::exact_phrase_count(manifest, a.phrase, cs::StreamOptions{a.lenient});
  report.emit(std::nullopt);
}

struct ConceptsArgs {
  std::string corpus, classes, out;
  bool lenient = false;
};

void cmd_concepts(const ConceptsArgs& a) {
  const auto manifest = cs::open_corpus(a.corpus);
  Report report("concepts", cs::Lexicons::builtin().fingerprint());
  report.config() = {{"corpus", a.corpus},
                     {"classes", a.classes.empty() ? json(nullptr) : json(a.classes)},
                     {"out", a.out},
                     {"lenient", a.lenient}};
  report.input_corpus(a.corpus, manifest);
  std::vector<cs::TermSet> sets;
  cs::for_each_sample(manifest, cs::StreamOptions{a.lenient},
                      [&](const cs::SampleRecord& r) { sets.push_back(cs::extract_concept_nouns(r.caption)); });
  std::vector<std::string> classes;
  if (!a.classes.empty()) {
    report.input(a.classes);
    for (const auto& c : cs::load_concepts(a.classes)) classes.push_back(c.name);
  }
  const auto concepts = cs::compile_concepts(sets, classes);
  std::ofstream out(a.out);
  if (!out) throw cs::Error(cs::ErrorKind::io, "cannot write " + a.out);
  for (const auto& c : concepts) out << c.name << '\n';
  report["downstream_samples"] = sets.size();
  report["concepts"] = concepts.size();
  report.emit(std::nullopt);
}

void print_error(std::string_view kind, std::string_view message) {
  json err{{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept frequency analysis for image-text pretraining corpora", "conceptscope"};
  app.set_version_flag("--version", CONCEPTSCOPE_VERSION);
  app.set_config("--config", "", "TOML-style config file; command-line flags take precedence");
  app.require_subcommand(1);

  std::function<void()> run;
  unsigned workers = 1;
  try {
    workers = default_workers();
  } catch (const cs::Error& e) {
    print_error(cs::to_string(e.kind()), e.what());
    return 2;
  }

  IndexArgs index_args;
  index_args.workers = workers;
  auto* index = app.add_subcommand("index", "Build a text index from a caption corpus");
  index->add_option("--corpus", index_args.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
  index->add_option("--out", index_args.out, "Index file to write")->required();
  index->add_option("--annotations", index_args.annotations, "POS tagger output (JSONL)")->check(CLI::ExistingFile);
  index->add_option("--workers", index_args.workers, "Shard worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  index->add_flag("--lenient", index_args.lenient, "Skip malformed lines instead of failing");
  index->callback([&] { run = [&] { cmd_index(index_args); }; });

  ImageIndexArgs image_args;
  auto* image = app.add_subcommand("image-index", "Binarize image tag scores into an image index");
  image->add_option("--tags", image_args.tags, "Tag CSV shards")->required()->check(CLI::ExistingFile);
  image->add_option("--index", image_args.index, "Text index of the same corpus")->required()->check(CLI::ExistingFile);
  image->add_option("--threshold", image_args.threshold)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  image->add_option("--out", image_args.out)->required();
  image->callback([&] { run = [&] { cmd_image_index(image_args); }; });

  FrequencyArgs freq_args;
  auto* freq = app.add_subcommand("frequency", "Text, image and matched counts per concept");
  freq->add_option("--index", freq_args.index, "Text index")->required()->check(CLI::ExistingFile);
  freq->add_option("--concepts", freq_args.concepts, "Concept list")->required()->check(CLI::ExistingFile);
  auto* freq_tags = freq->add_option("--tags", freq_args.tags, "Tag CSV shards")->check(CLI::ExistingFile);
  freq->add_option("--image-index", freq_args.image_index, "Saved image index")
      ->check(CLI::ExistingFile)
      ->excludes(freq_tags);
  freq->add_option("--threshold", freq_args.threshold)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  freq->add_option("--out", freq_args.out, "Frequency CSV")->required();
  freq->callback([&] { run = [&] { cmd_frequency(freq_args); }; });

  MisalignmentArgs mis_args;
  auto* mis = app.add_subcommand("misalignment", "Fraction of pairs whose image and caption share no concept");
  mis->add_option("--corpus", mis_args.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
  mis->add_option("--index", mis_args.index, "Text index")->required()->check(CLI::ExistingFile);
  auto* mis_tags = mis->add_option("--tags", mis_args.tags, "Tag CSV shards")->check(CLI::ExistingFile);
  auto* mis_image = mis->add_option("--image-index", mis_args.image_index, "Saved image index")
                        ->check(CLI::ExistingFile)
                        ->excludes(mis_tags);
  mis->add_option("--threshold", mis_args.threshold)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  mis->add_option("--concepts", mis_args.concepts, "Concept list")->required()->check(CLI::ExistingFile);
  mis->add_option("--export", mis_args.export_path, "CSV of misaligned pairs");
  mis->add_option("--out", mis_args.out, "Also write the report here");
  mis->add_flag("--lenient", mis_args.lenient);
  mis->callback([&] {
    if (mis_tags->count() == 0 && mis_image->count() == 0) {
      throw CLI::ValidationError("misalignment", "--tags or --image-index is required");
    }
    run = [&] { cmd_misalignment(mis_args); };
  });

  TrendArgs trend_args;
  auto* trend = app.add_subcommand("trend", "Log-linear fit of performance against concept frequency");
  trend->add_option("--frequency", trend_args.frequency, "Frequency CSV")->required()->check(CLI::ExistingFile);
  trend->add_option("--performance", trend_args.performance, "concept,score CSV")
      ->required()
      ->check(CLI::ExistingFile);
  trend->add_option("--bins", trend_args.bins)->check(CLI::PositiveNumber)->capture_default_str();
  trend->add_option("--field", trend_args.field, "text, image or matched (default: matched when present)")
      ->check(CLI::IsMember({"text", "image", "matched"}));
  trend->add_option("--out", trend_args.out, "Also write the report here");
  trend->callback([&] { run = [&] { cmd_trend(trend_args); }; });

  TailArgs tail_args;
  auto* tail = app.add_subcommand("tail", "Long-tail summary and the k rarest concepts");
  tail->add_option("--frequency", tail_args.frequency, "Frequency CSVs, one per corpus")
      ->required()
      ->check(CLI::ExistingFile);
  tail->add_option("--k", tail_args.k)->capture_default_str();
  tail->add_option("--field", tail_args.field)->check(CLI::IsMember({"text", "image", "matched"}));
  tail->add_option("--out", tail_args.out, "Also write the report here");
  tail->callback([&] { run = [&] { cmd_tail(tail_args); }; });

  CorrelateArgs corr_args;
  auto* corr = app.add_subcommand("correlate", "Pearson correlation of log frequencies across corpora");
  corr->add_option("--frequency", corr_args.frequency, "Frequency CSVs, one per corpus")
      ->required()
      ->expected(2, -1)
      ->check(CLI::ExistingFile);
  corr->add_option("--field", corr_args.field)->check(CLI::IsMember({"text", "image", "matched"}));
  corr->add_option("--out", corr_args.out, "Also write the report here");
  corr->callback([&] { run = [&] { cmd_correlate(corr_args); }; });

  CurateArgs cur_args;
  auto* cur = app.add_subcommand("curate", "Outlier removal, deduplication and class balancing");
  cur->add_option("--pool", cur_args.pool, "image_id,class_name,embedding_row,phash_hex CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cur->add_option("--embeddings", cur_args.embeddings, "Embedding matrix");
  cur->add_option("--images-dir", cur_args.images_dir, "Directory of <image_id>.pgm files")
      ->check(CLI::ExistingDirectory);
  cur->add_option("--exclude", cur_args.exclude, "Manual exclusion list")->check(CLI::ExistingFile);
  cur->add_option("--outlier-fraction", cur_args.config.outlier_fraction)->capture_default_str();
  cur->add_option("--dedup-common", cur_args.config.dedup_threshold_common)->capture_default_str();
  cur->add_option("--dedup-fine", cur_args.config.dedup_threshold_finegrained)->capture_default_str();
  cur->add_option("--hamming", cur_args.config.phash_hamming_threshold)->capture_default_str();
  cur->add_option("--target", cur_args.target, "Images per class (default: smallest class)");
  cur->add_option("--fine-grained", cur_args.fine_grained, "Classes using the fine-grained threshold");
  cur->add_option("--out", cur_args.out, "Curated image list")->required();
  cur->callback([&] { run = [&] { cmd_curate(cur_args); }; });

  CmcArgs cmc_args;
  auto* cmc = app.add_subcommand("cmc", "Cumulative matching characteristic of nearest-neighbour retrieval");
  cmc->add_option("--queries", cmc_args.queries)->required();
  cmc->add_option("--query-labels", cmc_args.query_labels)->required()->check(CLI::ExistingFile);
  cmc->add_option("--gallery", cmc_args.gallery)->required();
  cmc->add_option("--gallery-labels", cmc_args.gallery_labels)->required()->check(CLI::ExistingFile);
  cmc->add_option("--tail-queries", cmc_args.tail_queries, "Tail queries; adds delta CMC");
  cmc->add_option("--tail-labels", cmc_args.tail_labels)->check(CLI::ExistingFile);
  cmc->add_option("--k", cmc_args.ks, "Ranks to report")->check(CLI::PositiveNumber)->capture_default_str();
  cmc->add_option("--out", cmc_args.out, "Also write the report here");
  cmc->callback([&] { run = [&] { cmd_cmc(cmc_args); }; });

  PhraseArgs phrase_args;
  auto* phrase = app.add_subcommand("phrase", "Count captions containing an exact token sequence");
  phrase->add_option("--corpus", phrase_args.corpus)->required()->check(CLI::ExistingFile);
  phrase->add_option("phrase", phrase_args.phrase)->required();
  phrase->add_flag("--lenient", phrase_args.lenient);
  phrase->callback([&] { run = [&] { cmd_phrase(phrase_args); }; });

  ConceptsArgs concepts_args;
  auto* concepts = app.add_subcommand("concepts", "Mine a concept list from downstream captions");
  concepts->add_option("--corpus", concepts_args.corpus, "Downstream captions")->required()->check(CLI::ExistingFile);
  concepts->add_option("--classes", concepts_args.classes, "Class names kept unconditionally")
      ->check(CLI::ExistingFile);
  concepts->add_option("--out", concepts_args.out)->required();
  concepts->add_flag("--lenient", concepts_args.lenient);
  concepts->callback([&] { run = [&] { cmd_concepts(concepts_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return 2;
  }

  try {
    run();
  } catch (const cs::Error& e) {
    print_error(cs::to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
