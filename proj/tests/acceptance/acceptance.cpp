// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "conceptscope/curation.hpp"
#include "conceptscope/digest.hpp"
#include "conceptscope/error.hpp"
#include "conceptscope/image_tags.hpp"
#include "conceptscope/inverted_index.hpp"
#include "conceptscope/matched_freq.hpp"
#include "conceptscope/special_functions.hpp"
#include "conceptscope/trend_stats.hpp"
#include "synthetic.hpp"

using namespace conceptscope;
using testsupport::seconds_since;
using testsupport::TempDir;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------
// 1. indexing oracle

std::vector<Concept> random_concepts(std::mt19937_64& rng, std::size_t n) {
  const auto& nouns = testsupport::noun_pool();
  const std::vector<std::string> extras{"red", "running", "zyzzyva", "the", "2019", "café"};
  std::vector<Concept> out;
  std::set<std::string> seen;
  while (out.size() < n) {
    const std::size_t words = 1 + rng() % 3;
    std::string name;
    for (std::size_t w = 0; w < words; ++w) {
      if (!name.empty()) name += ' ';
      name += rng() % 10 == 0 ? extras[rng() % extras.size()] : nouns[rng() % nouns.size()];
    }
    Concept c = make_concept(name);
    if (seen.insert(c.name).second) out.push_back(std::move(c));
  }
  return out;
}

void indexing_oracle(Outcome& out) {
  TempDir dir("acc1");
  std::mt19937_64 rng(101);
  std::uint64_t compared = 0, nonzero = 0;
  for (int corpus = 0; corpus < 5; ++corpus) {
    const std::size_t n = 1000 + rng() % 9001;
    std::vector<std::string> captions;
    for (std::size_t i = 0; i < n; ++i) captions.push_back(testsupport::random_caption(rng));
    auto manifest_path = testsupport::write_corpus(dir / ("c" + std::to_string(corpus)), "c" + std::to_string(corpus),
                                                   captions, 1 + rng() % 6, rng() % 1000000);
    IndexBuildOptions opts;
    opts.workers = default_workers();
    auto index = build_text_index(open_corpus(manifest_path), opts);

    std::vector<TermSet> nouns;
    for (const auto& c : captions) nouns.push_back(extract_concept_nouns(c));
    for (const auto& concept_ : random_concepts(rng, 100)) {
      std::vector<SampleIndex> expected;
      for (std::size_t i = 0; i < n; ++i) {
        bool all = std::all_of(concept_.unigrams.begin(), concept_.unigrams.end(), [&](const std::string& u) {
          return std::binary_search(nouns[i].begin(), nouns[i].end(), u);
        });
        if (all) expected.push_back(static_cast<SampleIndex>(i));
      }
      auto hits = text_frequency(index, concept_);
      std::vector<SampleIndex> got(hits.hits.begin(), hits.hits.end());
      ++compared;
      if (!expected.empty()) ++nonzero;
      if (got != expected || hits.count != expected.size()) {
        out.require(false, "corpus " + std::to_string(corpus) + " concept '" + concept_.name + "'");
        return;
      }
    }
  }
  out.detail << compared << " concept queries over 5 corpora equal the rescan oracle (" << nonzero
             << " with hits)";
}

// ---------------------------------------------------------------------------
// 2. misalignment

void misalignment(Outcome& out) {
  TempDir dir("acc2");
  const std::vector<TermSet> image{{"dog"}, {"cat"}, {}, {"car", "tree"}};
  const std::vector<TermSet> text{{"dog", "park"}, {"dog"}, {"car"}, {"car"}};
  const std::vector<std::uint64_t> ids{1, 2, 3, 4};
  auto report = misalignment_degree(image, text, "fixture");
  out.require(report.degree == 0.5 && report.misaligned_pairs == 2, "fixture degree");
  auto rows = export_misaligned(dir / "fixture.csv", ids, image, text);
  out.require(rows == 2, "fixture export row count");
  out.require(testsupport::read_text(dir / "fixture.csv") ==
                  "sample_id,image_concepts,text_concepts\n2,cat,dog\n3,,car\n",
              "fixture export content");

  std::mt19937_64 rng(202);
  const std::size_t n = 1000, concepts = 12;
  std::vector<PostingList> image_hits(concepts), text_hits(concepts);
  std::vector<std::set<std::uint32_t>> brute_image(n), brute_text(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::uint32_t c = 0; c < concepts; ++c) {
      if (rng() % 7 == 0) {
        image_hits[c].append(static_cast<SampleIndex>(s));
        brute_image[s].insert(c);
      }
      if (rng() % 6 == 0) {
        text_hits[c].append(static_cast<SampleIndex>(s));
        brute_text[s].insert(c);
      }
    }
  }
  std::uint64_t brute_misaligned = 0;
  std::vector<std::uint64_t> brute_ids;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::uint32_t> both;
    std::set_intersection(brute_image[s].begin(), brute_image[s].end(), brute_text[s].begin(), brute_text[s].end(),
                          std::back_inserter(both));
    if (both.empty()) {
      ++brute_misaligned;
      brute_ids.push_back(10000 + s);
    }
  }
  auto image_map = SampleConceptMap::invert(image_hits, n);
  auto text_map = SampleConceptMap::invert(text_hits, n);
  auto random_report = misalignment_degree(image_map, text_map, "random");
  out.require(random_report.misaligned_pairs == brute_misaligned, "random misaligned count");
  out.require(random_report.degree == static_cast<double>(brute_misaligned) / static_cast<double>(n),
              "random degree");

  std::vector<std::string> names;
  for (std::size_t c = 0; c < concepts; ++c) names.push_back("k" + std::to_string(c));
  std::vector<std::uint64_t> sample_ids(n);
  for (std::size_t s = 0; s < n; ++s) sample_ids[s] = 10000 + s;
  auto exported = export_misaligned(dir / "random.csv", sample_ids, image_map, text_map, names);
  out.require(exported == brute_misaligned, "random export count");
  std::istringstream lines(testsupport::read_text(dir / "random.csv"));
  std::string line;
  std::getline(lines, line);
  std::vector<std::uint64_t> exported_ids;
  while (std::getline(lines, line)) exported_ids.push_back(std::stoull(line.substr(0, line.find(','))));
  out.require(exported_ids == brute_ids, "random export ids");
  out.detail << "fixture degree " << format_degree_percent(report) << ", 2 rows; random 1000 pairs: "
             << brute_misaligned << " misaligned, matches brute force";
}

// ---------------------------------------------------------------------------
// 3. statistics

void statistics(Outcome& out) {
  const std::vector<double> x4{1, 2, 3, 4}, y4{1, 3, 2, 4};
  auto r = pearson_with_ttest(x4, y4);
  out.require(std::fabs(r.rho - 0.8) < 1e-9, "rho 0.8");
  out.require(std::fabs(r.p_value - 0.2) < 1e-9, "p 0.2");
  const std::vector<double> x3{1, 2, 3}, up{2, 4, 6}, down{6, 4, 2};
  auto pos = pearson_with_ttest(x3, up);
  auto neg = pearson_with_ttest(x3, down);
  out.require(pos.rho == 1.0 && pos.p_value == 0.0, "perfect positive");
  out.require(neg.rho == -1.0 && neg.p_value == 0.0, "perfect negative");

  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> t_dist(-15.0, 15.0);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const double t = t_dist(rng);
    const double dof = 1 + static_cast<double>(rng() % 500);
    const double tail = 0.5 * boost::math::ibeta(dof / 2, 0.5, dof / (dof + t * t));
    const double oracle = t > 0 ? 1.0 - tail : tail;
    worst = std::max(worst, std::fabs(students_t_cdf(t, dof) - oracle));
  }
  out.require(worst < 1e-12, "t CDF vs incomplete-beta oracle");
  out.detail << "rho=" << fmt(r.rho, 15) << " p=" << fmt(r.p_value, 15) << "; perfect fixtures rho=+-1 p=0; "
             << "max |t CDF - oracle| over 50 pairs = " << fmt(worst, 3);
}

// ---------------------------------------------------------------------------
// 4. planted log-linear recovery

void planted_recovery(Outcome& out) {
  std::mt19937_64 rng(404);
  testsupport::ZipfSampler zipf(1000000, 1.1);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<TrendPoint> points;
  std::uint64_t lo = ~0ULL, hi = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t f = zipf(rng);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
    points.push_back({"c" + std::to_string(i), f, 0.1 * std::log10(static_cast<double>(f)) + 0.05 + noise(rng)});
  }
  const double decades = std::log10(static_cast<double>(hi) / static_cast<double>(lo));
  out.require(decades >= 5.0, "frequencies span at least 5 decades");
  auto fit = fit_log_linear(points);
  out.require(std::fabs(fit.binned.slope - 0.1) <= 0.01, "slope within 10%");
  out.require(fit.binned.rho >= 0.95, "rho >= 0.95");
  out.require(fit.binned.significant, "significant");
  out.detail << "span " << fmt(decades, 3) << " decades; binned slope=" << fmt(fit.binned.slope) << " rho="
             << fmt(fit.binned.rho) << " p=" << fmt(fit.binned.p_value, 3) << " over " << fit.binned.n
             << " active bins (" << fit.trend.pruned_bins.size() << " pruned); per-concept slope="
             << fmt(fit.per_concept.slope) << " rho=" << fmt(fit.per_concept.rho);
}

// ---------------------------------------------------------------------------
// 5. long tail

void long_tail(Outcome& out) {
  std::mt19937_64 rng(505);
  const std::size_t concepts = 10000, samples = 200000, per_sample = 5;
  testsupport::ZipfSampler zipf(concepts, 1.0);
  TextIndexBuilder builder("zipf", "synthetic");
  for (std::size_t s = 0; s < samples; ++s) {
    TermSet set;
    for (std::size_t j = 0; j < per_sample; ++j) set.push_back("concept" + std::to_string(zipf(rng)));
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    builder.add(set);
  }
  auto index = std::move(builder).finish();
  std::vector<Concept> cs;
  for (std::size_t c = 1; c <= concepts; ++c) cs.push_back(make_concept("concept" + std::to_string(c)));
  auto records = frequency_table(index, nullptr, cs);
  auto summary = tail_summary(records, FrequencyField::text, 290);
  out.require(summary.fraction_below_mean > 2.0 / 3.0, "fraction below mean > 2/3");
  out.require(summary.bottom_k.size() == 290, "bottom-k size");
  out.detail << "fraction_below_mean=" << fmt(summary.fraction_below_mean) << " mean=" << fmt(summary.mean_frequency)
             << " zero-count=" << summary.zero_count_concepts << " of " << summary.total_concepts;
}

// ---------------------------------------------------------------------------
// 6. threshold monotonicity

void threshold_monotonicity(Outcome& out) {
  TempDir dir("acc6");
  std::mt19937_64 rng(606);
  std::uint64_t checked = 0;
  for (int fixture = 0; fixture < 5; ++fixture) {
    const std::uint64_t samples = 500 + rng() % 3000;
    std::vector<TagRecord> tags;
    std::uniform_real_distribution<double> u(0, 1);
    const double grid[] = {0.5, 0.6, 0.7, 0.49999, 0.69999};
    for (int i = 0; i < 20000; ++i) {
      double score = rng() % 5 == 0 ? grid[rng() % 5] : u(rng);
      tags.push_back({rng() % samples, "concept " + std::to_string(rng() % 60), score});
    }
    std::string csv = "sample_index,concept,score\n";
    for (const auto& t : tags) csv += std::to_string(t.sample_index) + "," + t.concept_name + "," + fmt(t.score, 17) + "\n";
    testsupport::write_text(dir / "tags.csv", csv);
    std::vector<std::filesystem::path> files{dir / "tags.csv"};
    auto i5 = build_image_index(files, 0.5, samples);
    auto i6 = build_image_index(files, 0.6, samples);
    auto i7 = build_image_index(files, 0.7, samples);
    auto subset = [](const ImageIndex& small, const ImageIndex& big) {
      for (const auto& name : small.sorted_concepts()) {
        const PostingList* b = big.find(name);
        const PostingList* s = small.find(name);
        if (!b || !std::includes(b->begin(), b->end(), s->begin(), s->end())) return false;
      }
      return true;
    };
    out.require(subset(i7, i6) && subset(i6, i5), "fixture " + std::to_string(fixture) + " subsets");
    for (const auto& name : i5.sorted_concepts()) {
      Concept c = make_concept(name);
      auto a = image_frequency(i7, c).count, b = image_frequency(i6, c).count, d = image_frequency(i5, c).count;
      out.require(a <= b && b <= d, "counts for '" + name + "'");
      ++checked;
    }
  }
  out.detail << checked << " concept lists over 5 fixtures satisfy 0.7 subset of 0.6 subset of 0.5";
}

// ---------------------------------------------------------------------------
// 7. persistence and scale

TextIndex fuzz_index(std::mt19937_64& rng) {
  TextIndex index;
  index.corpus_name = rng() % 3 ? "fuzz-" + std::to_string(rng() % 1000) : "";
  index.pipeline_fingerprint = "fnv1a64:" + to_hex64(rng());
  index.sample_count = rng() % 4 == 0 ? rng() % 10 : rng() % 5000000;
  const std::size_t terms = rng() % 60;
  const std::vector<std::string> alphabet{"a", "b", "ß", "é", "-", "'", "z", "鳥", "0"};
  for (std::size_t t = 0; t < terms && index.sample_count > 0; ++t) {
    std::string term;
    for (std::size_t i = 0, n = 1 + rng() % 8; i < n; ++i) term += alphabet[rng() % alphabet.size()];
    std::vector<SampleIndex> v;
    for (std::size_t i = 0, n = rng() % 300; i < n; ++i) v.push_back(static_cast<SampleIndex>(rng() % index.sample_count));
    if (rng() % 10 == 0) v.push_back(static_cast<SampleIndex>(index.sample_count - 1));
    index.vocabulary[term] = PostingList::from_unsorted(std::move(v));
  }
  return index;
}

double median_query_seconds(const TextIndex& index, const Concept& query, int reps) {
  std::vector<double> times;
  std::uint64_t sink = 0;
  for (int r = 0; r < reps; ++r) {
    auto start = Clock::now();
    sink += text_frequency(index, query).count;
    times.push_back(seconds_since(start));
  }
  std::nth_element(times.begin(), times.begin() + reps / 2, times.end());
  if (sink == 0) std::cerr << "";
  return times[reps / 2];
}

// Captions with a planted pair of nouns, each in exactly 1,000 samples
// and co-occurring in 500, independent of corpus size.
std::vector<std::string> scale_corpus(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::string> captions;
  captions.reserve(n);
  const std::size_t stride = n / 1500;
  for (std::size_t i = 0; i < n; ++i) {
    std::string c = testsupport::random_caption(rng, 2, 10);
    if (i % stride == 0 && i / stride < 1500) {
      const std::size_t slot = i / stride;
      if (slot < 1000) c += " quokka";
      if (slot >= 500) c += " wombat";
    }
    captions.push_back(std::move(c));
  }
  return captions;
}

void persistence_and_scale(Outcome& out) {
  TempDir dir("acc7");
  std::mt19937_64 rng(707);
  int roundtrips = 0, corruptions = 0;
  for (int i = 0; i < 300; ++i) {
    auto index = fuzz_index(rng);
    save_index(index, dir / "f.cfix");
    auto back = load_index(dir / "f.cfix");
    save_index(back, dir / "g.cfix");
    auto bytes = testsupport::read_text(dir / "f.cfix");
    bool same = back == index && bytes == testsupport::read_text(dir / "g.cfix");
    for (const auto& term : index.sorted_terms()) {
      same = same && back.find(term) && *back.find(term) == *index.find(term);
    }
    out.require(same, "fuzzed round-trip " + std::to_string(i));
    ++roundtrips;
    if (bytes.size() > 0) {
      auto corrupt = bytes;
      corrupt[rng() % corrupt.size()] ^= static_cast<char>(1 + rng() % 255);
      testsupport::write_text(dir / "c.cfix", corrupt);
      try {
        load_index(dir / "c.cfix");
        out.require(false, "corruption undetected");
      } catch (const Error& e) {
        out.require(e.kind() == ErrorKind::integrity, "corruption kind");
        ++corruptions;
      }
    }
    std::vector<TagRecord> tags;
    const std::uint64_t samples = 1 + rng() % 1000;
    for (int t = 0, n = static_cast<int>(rng() % 200); t < n; ++t) {
      tags.push_back({rng() % samples, "c" + std::to_string(rng() % 30), static_cast<double>(rng() % 1001) / 1000});
    }
    auto image = build_image_index(tags, static_cast<double>(rng() % 11) / 10, samples, "img");
    save_image_index(image, dir / "i.cfix");
    out.require(load_image_index(dir / "i.cfix") == image, "image index round-trip");
  }

  std::mt19937_64 gen(708);
  auto big = scale_corpus(1000000, gen);
  auto small = scale_corpus(10000, gen);
  auto big_manifest = open_corpus(testsupport::write_corpus(dir / "big", "big", big, 16));
  auto small_manifest = open_corpus(testsupport::write_corpus(dir / "small", "small", small, 2));
  big.clear();
  big.shrink_to_fit();

  IndexBuildOptions opts;
  opts.workers = default_workers();
  auto start = Clock::now();
  auto big_index = build_text_index(big_manifest, opts);
  const double build_seconds = seconds_since(start);
  out.require(build_seconds < 120.0, "1M build under 120 s");
  out.require(big_index.sample_count == 1000000, "1M sample count");
  auto small_index = build_text_index(small_manifest, opts);

  Concept pair = make_concept("quokka wombat");
  Concept single = make_concept("quokka");
  out.require(text_frequency(big_index, pair).count == 500 && text_frequency(small_index, pair).count == 500,
              "planted pair frequency");
  out.require(text_frequency(big_index, single).count == 1000 && text_frequency(small_index, single).count == 1000,
              "planted single frequency");
  const int reps = 3001;
  const double big_pair = median_query_seconds(big_index, pair, reps);
  const double small_pair = median_query_seconds(small_index, pair, reps);
  const double big_single = median_query_seconds(big_index, single, reps);
  const double small_single = median_query_seconds(small_index, single, reps);
  const double ratio = std::max(big_pair / small_pair, big_single / small_single);
  out.require(ratio < 3.0, "latency ratio < 3");
  out.detail << roundtrips << " fuzzed round-trips, " << corruptions << " corruptions detected; 1M captions indexed in "
             << fmt(build_seconds, 3) << " s with " << opts.workers << " worker(s); median query 1M/10k: pair "
             << fmt(big_pair * 1e6, 3) << "/" << fmt(small_pair * 1e6, 3) << " us, single " << fmt(big_single * 1e6, 3)
             << "/" << fmt(small_single * 1e6, 3) << " us, worst ratio " << fmt(ratio, 3);
}

// ---------------------------------------------------------------------------
// 8. curation

CandidateImage with_embedding(std::string id, std::vector<float> v, std::string cls = "c") {
  CandidateImage img;
  img.image_id = std::move(id);
  img.class_name = std::move(cls);
  img.embedding = std::move(v);
  return img;
}

CandidateImage with_hash(std::string id, std::uint64_t h, std::string cls = "c") {
  CandidateImage img;
  img.image_id = std::move(id);
  img.class_name = std::move(cls);
  img.phash = h;
  return img;
}

std::vector<std::string> ids_of(const std::vector<CandidateImage>& pool) {
  std::vector<std::string> out;
  for (const auto& i : pool) out.push_back(i.image_id);
  return out;
}

void curation(Outcome& out) {
  const double step = std::acos(0.95);
  auto at = [](double theta) { return std::vector<float>{float(std::cos(theta)), float(std::sin(theta))}; };
  auto chain = soft_dedup({with_embedding("a", at(0)), with_embedding("b", at(step)), with_embedding("c", at(2 * step))}, 0.9);
  out.require(ids_of(chain.kept) == std::vector<std::string>{"a", "c"}, "chain keeps a,c");

  GrayImage flat{64, 48, std::vector<std::uint8_t>(64 * 48, 77)};
  out.require(compute_phash(flat) == 0, "constant image hash");

  auto ref = read_pgm(std::filesystem::path(CS_TEST_DATA_DIR) / "phash_reference.pgm");
  CandidateImage x, y;
  x.image_id = "x";
  y.image_id = "y";
  x.class_name = y.class_name = "c";
  x.pixels = ref;
  y.pixels = ref;
  auto identical = phash_dedup({x, y}, 0);
  out.require(identical.kept.size() == 1 && identical.removed.size() == 1, "identical images dedup at 0");
  out.require(compute_phash(ref) == 0xcd9993832236666cULL, "reference fixture hash");

  const std::uint64_t h = compute_phash(ref);
  const std::uint64_t far = h ^ 0x7FFULL;  // 11 bits apart
  auto survive = phash_dedup({with_hash("p", h), with_hash("q", far)}, 10);
  out.require(survive.kept.size() == 2, "distance 11 survives threshold 10");

  std::mt19937_64 rng(808);
  std::normal_distribution<float> g(0, 1);
  std::vector<CandidateImage> pool;
  for (int cls = 0; cls < 4; ++cls) {
    std::vector<float> centre(32);
    for (auto& v : centre) v = g(rng);
    for (int i = 0; i < 60; ++i) {
      std::vector<float> v = centre;
      for (auto& e : v) e += 0.7f * g(rng);
      char id[32];
      std::snprintf(id, sizeof id, "c%d-%03d", cls, i);
      auto img = with_embedding(id, v, "class" + std::to_string(cls));
      img.phash = i % 10 == 0 ? 0xABCDULL : rng();
      pool.push_back(img);
    }
  }
  for (int d = 0; d < 12; ++d) {
    auto dup = pool[static_cast<std::size_t>(d * 17)];
    dup.image_id += "-copy";
    pool.push_back(dup);
  }
  CurationConfig config;
  config.fine_grained_classes = {"class3"};
  const std::set<std::string> excluded{"c1-005", "c2-011"};
  auto result = run_curation(pool, config, excluded);
  bool monotone = true, partitions = true;
  std::size_t previous = pool.size();
  std::ostringstream counts;
  counts << pool.size();
  for (const auto& s : result.stages) {
    monotone = monotone && s.kept <= previous && s.input == previous;
    partitions = partitions && s.kept + s.removed == s.input;
    previous = s.kept;
    counts << " -> " << s.kept;
  }
  out.require(monotone, "stage counts monotone");
  out.require(partitions, "stages partition their input");

  auto again = run_curation(pool, config, excluded);
  out.require(ids_of(again.final_pool) == ids_of(result.final_pool), "identical re-run");
  CurationConfig keep_all = config;
  keep_all.outlier_fraction = 0.0;
  auto rerun = run_curation(result.final_pool, keep_all, excluded);
  bool nothing_removed = true;
  for (const auto& s : rerun.stages) nothing_removed = nothing_removed && s.removed == 0;
  out.require(nothing_removed && ids_of(rerun.final_pool) == ids_of(result.final_pool), "idempotent on curated pool");
  out.detail << "chain keeps {a,c}; constant hash 0; identical images collapse at 0 bits; 11-bit pair kept at 10; "
             << "stage kept counts " << counts.str() << "; re-run identical, curated pool is a fixed point";
}

// ---------------------------------------------------------------------------
// 9. CMC

EmbeddingMatrix to_matrix(const std::vector<std::vector<float>>& rows) {
  std::vector<float> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return EmbeddingMatrix(rows.size(), rows.empty() ? 0 : rows[0].size(), std::move(flat));
}

void cmc(Outcome& out) {
  std::mt19937_64 rng(909);
  std::normal_distribution<float> g(0, 1);
  const std::size_t dim = 16;
  auto random_vec = [&](float scale = 1.0f) {
    std::vector<float> v(dim);
    for (auto& x : v) x = scale * g(rng);
    return v;
  };
  for (int fixture = 0; fixture < 20; ++fixture) {
    const std::size_t classes = 2 + rng() % 6, gallery_n = classes + rng() % 40, queries = 1 + rng() % 30;
    std::vector<std::vector<float>> gallery, query_rows;
    std::vector<std::string> gallery_labels, query_labels;
    for (std::size_t i = 0; i < gallery_n; ++i) {
      gallery.push_back(random_vec());
      gallery_labels.push_back("L" + std::to_string(i < classes ? i : rng() % classes));
    }
    for (std::size_t q = 0; q < queries; ++q) {
      query_rows.push_back(random_vec());
      query_labels.push_back("L" + std::to_string(rng() % classes));
    }
    RetrievalSet set{to_matrix(query_rows), query_labels, to_matrix(gallery), gallery_labels};
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k <= gallery_n; ++k) ks.push_back(k);
    auto curve = cmc_curve(set, ks);
    out.require(std::is_sorted(curve.begin(), curve.end()), "CMC non-decreasing");
    out.require(curve.back() == 1.0, "CMC@|gallery| = 1");
  }

  const std::size_t classes = 20;
  std::vector<std::vector<float>> centres;
  for (std::size_t c = 0; c < classes; ++c) centres.push_back(random_vec());
  std::vector<std::vector<float>> gallery;
  std::vector<std::string> gallery_labels;
  for (std::size_t c = 0; c < classes; ++c) {
    for (int i = 0; i < 10; ++i) {
      auto v = centres[c];
      auto n = random_vec(0.3f);
      for (std::size_t d = 0; d < dim; ++d) v[d] += n[d];
      gallery.push_back(v);
      gallery_labels.push_back("class" + std::to_string(c));
    }
  }
  std::vector<std::vector<float>> head_q, tail_q;
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < classes; ++c) {
    for (int i = 0; i < 5; ++i) {
      auto v = centres[c];
      auto n = random_vec(0.3f);
      for (std::size_t d = 0; d < dim; ++d) v[d] += n[d];
      head_q.push_back(v);
      tail_q.push_back(random_vec());
      labels.push_back("class" + std::to_string(c));
    }
  }
  RetrievalSet head{to_matrix(head_q), labels, to_matrix(gallery), gallery_labels};
  RetrievalSet tail{to_matrix(tail_q), labels, to_matrix(gallery), gallery_labels};
  const std::vector<std::size_t> ks{1, 2, 5};
  auto delta = delta_cmc(head, tail, ks);
  for (std::size_t i = 0; i < ks.size(); ++i) out.require(delta[i] > 0, "delta CMC@" + std::to_string(ks[i]) + " > 0");
  out.detail << "20 random fixtures monotone with CMC@|gallery|=1; planted delta CMC@{1,2,5} = " << fmt(delta[0], 3)
             << ", " << fmt(delta[1], 3) << ", " << fmt(delta[2], 3) << " points";
}

// ---------------------------------------------------------------------------
// 10. cross-corpus correlation

void cross_corpus(Outcome& out) {
  std::mt19937_64 rng(1010);
  const std::size_t concepts = 2000;
  std::vector<std::size_t> ranking(concepts);
  for (std::size_t i = 0; i < concepts; ++i) ranking[i] = i;
  std::shuffle(ranking.begin(), ranking.end(), rng);
  testsupport::ZipfSampler zipf(concepts, 1.1);
  std::vector<Concept> cs;
  for (std::size_t i = 0; i < concepts; ++i) cs.push_back(make_concept("concept" + std::to_string(i)));

  std::vector<CorpusFrequencies> tables;
  for (const char* name : {"alpha", "beta", "gamma"}) {
    TextIndexBuilder builder(name, "synthetic");
    const std::size_t samples = 60000 + rng() % 40000;
    for (std::size_t s = 0; s < samples; ++s) {
      TermSet set;
      for (int j = 0; j < 4; ++j) set.push_back("concept" + std::to_string(ranking[zipf(rng) - 1]));
      std::sort(set.begin(), set.end());
      set.erase(std::unique(set.begin(), set.end()), set.end());
      builder.add(set);
    }
    auto index = std::move(builder).finish();
    tables.push_back({name, frequency_table(index, nullptr, cs)});
  }
  auto m = cross_corpus_correlation(tables, FrequencyField::text);
  double min_off = 1.0, asym = 0.0, diag = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    diag = std::max(diag, std::fabs(m.values[i][i] - 1.0));
    for (std::size_t j = 0; j < 3; ++j) {
      asym = std::max(asym, std::fabs(m.values[i][j] - m.values[j][i]));
      if (i != j) min_off = std::min(min_off, m.values[i][j]);
    }
  }
  out.require(min_off > 0.9, "off-diagonal > 0.9");
  out.require(asym <= 1e-12, "symmetric");
  out.require(diag <= 1e-12, "unit diagonal");
  out.detail << "3 corpora, min off-diagonal rho=" << fmt(min_off) << ", max asymmetry " << fmt(asym, 3)
             << ", max |diag-1| " << fmt(diag, 3);
}

struct Criterion {
  int number;
  const char* name;
  double budget_seconds;  // 0: no runtime bound
  std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "indexing oracle equivalence", 30, indexing_oracle},
      {2, "misalignment fixture and brute force", 5, misalignment},
      {3, "statistics exactness", 0, statistics},
      {4, "planted log-linear recovery", 10, planted_recovery},
      {5, "long-tail fraction below mean", 5, long_tail},
      {6, "tag threshold monotonicity", 0, threshold_monotonicity},
      {7, "index persistence and scale", 0, persistence_and_scale},
      {8, "curation pipeline", 0, curation},
      {9, "CMC properties", 5, cmc},
      {10, "cross-corpus correlation", 0, cross_corpus},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome outcome;
    const auto start = Clock::now();
    try {
      c.run(outcome);
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail << "[exception: " << e.what() << "]";
    }
    const double elapsed = seconds_since(start);
    if (c.budget_seconds > 0 && elapsed >= c.budget_seconds) {
      outcome.pass = false;
      outcome.detail << " [over the " << c.budget_seconds << " s budget]";
    }
    if (!outcome.pass) ++failures;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " [" << c.number << "] " << c.name << " (" << fmt(elapsed, 3)
              << " s): " << outcome.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
