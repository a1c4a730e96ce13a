#include "conceptscope/trend_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "conceptscope/error.hpp"
#include "conceptscope/special_functions.hpp"

namespace conceptscope {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

bool BinnedTrend::is_pruned(std::size_t bin) const {
  return std::binary_search(pruned_bins.begin(), pruned_bins.end(), bin);
}

bool BinnedTrend::is_active(std::size_t bin) const {
  return bin_concept_counts[bin] > 0 && !is_pruned(bin);
}

std::vector<std::size_t> BinnedTrend::active_bins() const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < bin_count(); ++b)
    if (is_active(b)) out.push_back(b);
  return out;
}

BinnedTrend bin_log_trend(std::span<const TrendPoint> points, std::size_t num_bins) {
  if (num_bins == 0) throw Error(ErrorKind::invalid_input, "num_bins must be positive");
  BinnedTrend trend;
  std::vector<std::pair<double, double>> logged;  // (log10 f, performance)
  for (const auto& p : points) {
    if (!std::isfinite(p.performance)) {
      throw Error(ErrorKind::invalid_input, "non-finite performance for '" + p.concept_name + "'");
    }
    if (p.frequency == 0) {
      ++trend.dropped_zero_frequency;
      continue;
    }
    logged.emplace_back(std::log10(static_cast<double>(p.frequency)), p.performance);
  }
  if (logged.empty()) throw Error(ErrorKind::invalid_input, "every concept has zero frequency");

  auto [lo_it, hi_it] = std::minmax_element(logged.begin(), logged.end());
  const double lo = lo_it->first;
  const double hi = hi_it->first;
  if (lo == hi) {
    num_bins = 1;
    trend.bin_edges = {lo - 0.5, lo + 0.5};
  } else {
    const double width = (hi - lo) / static_cast<double>(num_bins);
    trend.bin_edges.resize(num_bins + 1);
    for (std::size_t i = 0; i <= num_bins; ++i) trend.bin_edges[i] = lo + width * static_cast<double>(i);
    trend.bin_edges.back() = hi;
  }

  std::vector<double> perf_sum(num_bins, 0.0), log_sum(num_bins, 0.0);
  trend.bin_concept_counts.assign(num_bins, 0);
  for (const auto& [x, y] : logged) {
    auto upper = std::upper_bound(trend.bin_edges.begin(), trend.bin_edges.end(), x);
    std::size_t bin = static_cast<std::size_t>(upper - trend.bin_edges.begin());
    bin = bin == 0 ? 0 : std::min(bin - 1, num_bins - 1);
    perf_sum[bin] += y;
    log_sum[bin] += x;
    ++trend.bin_concept_counts[bin];
  }
  trend.bin_mean_performance.assign(num_bins, kNaN);
  trend.bin_mean_log_frequency.assign(num_bins, kNaN);
  for (std::size_t b = 0; b < num_bins; ++b) {
    if (auto n = trend.bin_concept_counts[b]) {
      trend.bin_mean_performance[b] = perf_sum[b] / static_cast<double>(n);
      trend.bin_mean_log_frequency[b] = log_sum[b] / static_cast<double>(n);
    }
  }
  return trend;
}

double quantile_linear(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::invalid_input, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lower = static_cast<std::size_t>(std::floor(h));
  const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
  return sorted[lower] + (h - static_cast<double>(lower)) * (sorted[upper] - sorted[lower]);
}

BinnedTrend prune_bins_iqr(BinnedTrend trend) {
  const auto active = trend.active_bins();
  if (active.size() < 4) return trend;
  std::vector<double> counts;
  for (auto b : active) counts.push_back(static_cast<double>(trend.bin_concept_counts[b]));
  std::sort(counts.begin(), counts.end());
  const double q1 = quantile_linear(counts, 0.25);
  const double q3 = quantile_linear(counts, 0.75);
  const double fence = q1 - 1.5 * (q3 - q1);
  for (auto b : active) {
    if (static_cast<double>(trend.bin_concept_counts[b]) < fence) trend.pruned_bins.push_back(b);
  }
  std::sort(trend.pruned_bins.begin(), trend.pruned_bins.end());
  return trend;
}

namespace {

struct Moments {
  double mean_x = 0, mean_y = 0, sxx = 0, syy = 0, sxy = 0;
};

Moments moments(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorKind::mismatch, "correlation inputs differ in length (" + std::to_string(xs.size()) +
                                         " vs " + std::to_string(ys.size()) + ")");
  }
  Moments m;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw Error(ErrorKind::invalid_input, "non-finite value in correlation input");
    }
    m.mean_x += xs[i];
    m.mean_y += ys[i];
  }
  m.mean_x /= n;
  m.mean_y /= n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - m.mean_x;
    const double dy = ys[i] - m.mean_y;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  if (m.sxx == 0.0 || m.syy == 0.0) throw Error(ErrorKind::invalid_input, "zero variance in correlation input");
  return m;
}

double rho_from(const Moments& m) {
  double rho = m.sxy / std::sqrt(m.sxx * m.syy);
  // Exactly collinear data can land a few ulps short of +-1.
  if (std::fabs(rho) > 1.0 - 1e-14) rho = std::copysign(1.0, rho);
  return rho;
}

}  // namespace

double pearson_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 2) throw Error(ErrorKind::invalid_input, "correlation needs at least two points");
  return rho_from(moments(xs, ys));
}

CorrelationReport pearson_with_ttest(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 3 || ys.size() < 3) throw Error(ErrorKind::invalid_input, "t-test needs n >= 3");
  const Moments m = moments(xs, ys);
  CorrelationReport r;
  r.n = xs.size();
  r.rho = rho_from(m);
  r.slope = m.sxy / m.sxx;
  r.intercept = m.mean_y - r.slope * m.mean_x;
  const double dof = static_cast<double>(r.n) - 2.0;
  if (std::fabs(r.rho) == 1.0) {
    r.p_value = 0.0;
  } else {
    const double t = r.rho * std::sqrt(dof / (1.0 - r.rho * r.rho));
    r.p_value = students_t_two_tailed_p(t, dof);
  }
  r.significant = r.p_value < kSignificanceLevel;
  return r;
}

LogLinearFit fit_log_linear(std::span<const TrendPoint> points, std::size_t num_bins) {
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    if (p.frequency == 0) continue;
    xs.push_back(std::log10(static_cast<double>(p.frequency)));
    ys.push_back(p.performance);
  }
  if (xs.size() < 3) throw Error(ErrorKind::invalid_input, "log-linear fit needs at least 3 positive-frequency points");

  LogLinearFit fit;
  fit.trend = prune_bins_iqr(bin_log_trend(points, num_bins));
  std::vector<double> bx, by;
  for (auto b : fit.trend.active_bins()) {
    bx.push_back(fit.trend.bin_mean_log_frequency[b]);
    by.push_back(fit.trend.bin_mean_performance[b]);
  }
  if (bx.size() < 3) {
    throw Error(ErrorKind::invalid_input,
                "log-linear fit needs at least 3 active bins, got " + std::to_string(bx.size()));
  }
  fit.binned = pearson_with_ttest(bx, by);
  fit.per_concept = pearson_with_ttest(xs, ys);
  return fit;
}

TailSummary tail_summary(std::span<const ConceptFrequency> frequencies, std::size_t k) {
  if (frequencies.empty()) throw Error(ErrorKind::invalid_input, "tail summary needs at least one concept");
  if (k > frequencies.size()) {
    throw Error(ErrorKind::invalid_input, "k=" + std::to_string(k) + " exceeds the " +
                                              std::to_string(frequencies.size()) + " available concepts");
  }
  TailSummary s;
  s.total_concepts = frequencies.size();
  long double total = 0;
  for (const auto& f : frequencies) {
    total += static_cast<long double>(f.frequency);
    if (f.frequency == 0) ++s.zero_count_concepts;
  }
  s.mean_frequency = static_cast<double>(total / static_cast<long double>(frequencies.size()));
  std::size_t below = 0;
  for (const auto& f : frequencies)
    if (static_cast<double>(f.frequency) < s.mean_frequency) ++below;
  s.fraction_below_mean = static_cast<double>(below) / static_cast<double>(frequencies.size());

  std::vector<ConceptFrequency> sorted(frequencies.begin(), frequencies.end());
  auto by_tail = [](const ConceptFrequency& a, const ConceptFrequency& b) {
    return a.frequency != b.frequency ? a.frequency < b.frequency : a.concept_name < b.concept_name;
  };
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end(), by_tail);
  sorted.resize(k);
  s.bottom_k = std::move(sorted);
  return s;
}

TailSummary tail_summary(std::span<const FrequencyRecord> records, FrequencyField field, std::size_t k) {
  std::vector<ConceptFrequency> freqs;
  freqs.reserve(records.size());
  for (const auto& r : records) {
    auto count = r.get(field);
    if (!count) {
      throw Error(ErrorKind::invalid_input, "concept '" + r.concept_name + "' has no " +
                                                std::string(to_string(field)) + " count");
    }
    freqs.push_back({r.concept_name, *count});
  }
  return tail_summary(freqs, k);
}

std::vector<ConceptFrequency> min_across_corpora(std::span<const CorpusFrequencies> tables, FrequencyField field) {
  if (tables.empty()) throw Error(ErrorKind::invalid_input, "no frequency tables given");
  std::map<std::string, std::pair<std::uint64_t, std::size_t>> acc;  // name -> (min, corpora seen)
  for (const auto& table : tables) {
    std::map<std::string, std::uint64_t> seen;
    for (const auto& r : table.records) {
      auto count = r.get(field);
      if (!count) {
        throw Error(ErrorKind::invalid_input, "corpus '" + table.corpus_name + "' has no " +
                                                  std::string(to_string(field)) + " counts");
      }
      if (!seen.emplace(r.concept_name, *count).second) {
        throw Error(ErrorKind::invalid_input,
                    "duplicate concept '" + r.concept_name + "' in corpus '" + table.corpus_name + "'");
      }
    }
    for (const auto& [name, count] : seen) {
      auto [it, inserted] = acc.try_emplace(name, count, 0);
      it->second.first = std::min(it->second.first, count);
      ++it->second.second;
    }
  }
  std::vector<ConceptFrequency> out;
  for (const auto& [name, entry] : acc) {
    if (entry.second != tables.size()) {
      throw Error(ErrorKind::mismatch, "concept '" + name + "' is missing from some corpora");
    }
    out.push_back({name, entry.first});
  }
  return out;
}

}  // namespace conceptscope
