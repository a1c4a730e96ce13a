#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "conceptscope/error.hpp"
#include "conceptscope/trend_stats.hpp"

namespace conceptscope {

void validate(const RetrievalSet& set) {
  if (set.gallery.rows() == 0) throw Error(ErrorKind::invalid_input, "empty gallery");
  if (set.queries.rows() == 0) throw Error(ErrorKind::invalid_input, "no queries");
  if (set.queries.dim() != set.gallery.dim()) {
    throw Error(ErrorKind::mismatch, "dimension mismatch: queries " + std::to_string(set.queries.dim()) +
                                         ", gallery " + std::to_string(set.gallery.dim()));
  }
  if (set.query_labels.size() != set.queries.rows() || set.gallery_labels.size() != set.gallery.rows()) {
    throw Error(ErrorKind::mismatch, "label count does not match embedding rows");
  }
  std::unordered_set<std::string> gallery(set.gallery_labels.begin(), set.gallery_labels.end());
  for (const auto& label : set.query_labels) {
    if (!gallery.contains(label)) {
      throw Error(ErrorKind::invalid_input, "query label '" + label + "' does not appear in the gallery");
    }
  }
}

namespace {

double norm(std::span<const float> v) {
  double s = 0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

double cosine(std::span<const float> a, double norm_a, std::span<const float> b, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  double dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += static_cast<double>(a[i]) * b[i];
  return dot / (norm_a * norm_b);
}

// 0-based rank of the best-placed same-label gallery item for each query.
std::vector<std::size_t> first_match_ranks(const RetrievalSet& set) {
  validate(set);
  const std::size_t g = set.gallery.rows();
  std::vector<double> gallery_norms(g);
  for (std::size_t j = 0; j < g; ++j) gallery_norms[j] = norm(set.gallery.row(j));

  std::vector<std::size_t> ranks(set.queries.rows());
  std::vector<double> sims(g);
  for (std::size_t q = 0; q < set.queries.rows(); ++q) {
    const auto query = set.queries.row(q);
    const double qn = norm(query);
    std::size_t best = g;
    for (std::size_t j = 0; j < g; ++j) {
      sims[j] = cosine(query, qn, set.gallery.row(j), gallery_norms[j]);
      if (set.gallery_labels[j] == set.query_labels[q] && (best == g || sims[j] > sims[best])) best = j;
    }
    std::size_t rank = 0;
    for (std::size_t j = 0; j < g; ++j) {
      if (sims[j] > sims[best] || (sims[j] == sims[best] && j < best)) ++rank;
    }
    ranks[q] = rank;
  }
  return ranks;
}

}  // namespace

std::vector<double> cmc_curve(const RetrievalSet& set, std::span<const std::size_t> ks) {
  for (auto k : ks)
    if (k == 0) throw Error(ErrorKind::invalid_input, "CMC@k needs k >= 1");
  const auto ranks = first_match_ranks(set);
  std::vector<double> out;
  out.reserve(ks.size());
  for (auto k : ks) {
    auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r < k; });
    out.push_back(static_cast<double>(hits) / static_cast<double>(ranks.size()));
  }
  return out;
}

double cmc_at_k(const RetrievalSet& set, std::size_t k) {
  const std::size_t ks[] = {k};
  return cmc_curve(set, ks).front();
}

std::vector<double> delta_cmc(const RetrievalSet& head, const RetrievalSet& tail, std::span<const std::size_t> ks) {
  auto h = cmc_curve(head, ks);
  auto t = cmc_curve(tail, ks);
  std::vector<double> out(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) out[i] = 100.0 * (h[i] - t[i]);
  return out;
}

}  // namespace conceptscope
