#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "conceptscope/matched_freq.hpp"

namespace conceptscope {

struct TrendPoint {
  std::string concept_name;
  std::uint64_t frequency = 0;
  double performance = 0.0;
};

inline constexpr std::size_t kDefaultBinCount = 20;

/// Performance averaged within equal-width log10-frequency bins.
struct BinnedTrend {
  std::vector<double> bin_edges;                 // log10 frequency, size = bins + 1
  std::vector<double> bin_mean_performance;      // NaN for empty bins
  std::vector<double> bin_mean_log_frequency;    // NaN for empty bins
  std::vector<std::uint64_t> bin_concept_counts;
  std::vector<std::size_t> pruned_bins;          // ascending
  std::uint64_t dropped_zero_frequency = 0;

  std::size_t bin_count() const noexcept { return bin_concept_counts.size(); }
  bool is_pruned(std::size_t bin) const;
  /// Occupied and not pruned.
  bool is_active(std::size_t bin) const;
  std::vector<std::size_t> active_bins() const;
};

/// Drops zero-frequency points and bins the rest between the minimum and
/// maximum positive frequency (maximum edge inclusive). When every point has
/// the same frequency the result is a single one-decade-wide bin centred on it.
BinnedTrend bin_log_trend(std::span<const TrendPoint> points, std::size_t num_bins = kDefaultBinCount);

/// Linear-interpolation quantile of an ascending sample (q in [0,1]).
double quantile_linear(std::span<const double> sorted, double q);

/// Prunes occupied bins whose concept count is below Q1 - 1.5 IQR of the
/// occupied bins' counts. No-op with fewer than four occupied bins.
BinnedTrend prune_bins_iqr(BinnedTrend trend);

struct CorrelationReport {
  double rho = 0.0;
  double p_value = 1.0;  // two-tailed, t distribution with n - 2 dof
  std::size_t n = 0;
  double slope = 0.0;    // least squares of y on x
  double intercept = 0.0;
  bool significant = false;  // p_value < kSignificanceLevel
};

inline constexpr double kSignificanceLevel = 0.05;

/// Product-moment correlation only; throws on zero variance or n < 2.
double pearson_rho(std::span<const double> xs, std::span<const double> ys);

/// Requires n >= 3 and non-zero variance in both variables. |rho| == 1
/// gives p = 0.
CorrelationReport pearson_with_ttest(std::span<const double> xs, std::span<const double> ys);

struct LogLinearFit {
  CorrelationReport binned;       // over active bins' (mean log10 f, mean performance)
  CorrelationReport per_concept;  // over every positive-frequency point
  BinnedTrend trend;              // after IQR pruning
};

/// Needs at least three positive-frequency points and three active bins.
LogLinearFit fit_log_linear(std::span<const TrendPoint> points, std::size_t num_bins = kDefaultBinCount);

struct ConceptFrequency {
  std::string concept_name;
  std::uint64_t frequency = 0;

  bool operator==(const ConceptFrequency&) const = default;
};

struct TailSummary {
  std::size_t total_concepts = 0;
  std::size_t zero_count_concepts = 0;
  double mean_frequency = 0.0;
  double fraction_below_mean = 0.0;  // strictly below
  std::vector<ConceptFrequency> bottom_k;  // ascending frequency, then name
};

TailSummary tail_summary(std::span<const ConceptFrequency> frequencies, std::size_t k);
TailSummary tail_summary(std::span<const FrequencyRecord> records, FrequencyField field, std::size_t k);

/// Per-concept minimum over corpora, matched by concept name. Every corpus
/// must list the same concept set. Output is sorted by name.
std::vector<ConceptFrequency> min_across_corpora(std::span<const CorpusFrequencies> tables, FrequencyField field);

/// Queries and gallery for nearest-neighbour retrieval by cosine similarity.
struct RetrievalSet {
  EmbeddingMatrix queries;
  std::vector<std::string> query_labels;
  EmbeddingMatrix gallery;
  std::vector<std::string> gallery_labels;
};

/// Throws on dimension or label-count mismatch, an empty gallery, or a query
/// label absent from the gallery.
void validate(const RetrievalSet& set);

/// Fraction of queries with a same-label gallery item among the top k
/// (ties broken by lower gallery index).
double cmc_at_k(const RetrievalSet& set, std::size_t k);

/// CMC@k for each k, ranking every query once.
std::vector<double> cmc_curve(const RetrievalSet& set, std::span<const std::size_t> ks);

/// Head minus tail CMC@k in percentage points, in the order of `ks`.
std::vector<double> delta_cmc(const RetrievalSet& head, const RetrievalSet& tail, std::span<const std::size_t> ks);

}  // namespace conceptscope
