#include "conceptscope/curation.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "conceptscope/csv.hpp"
#include "conceptscope/error.hpp"

namespace conceptscope {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// PGM

namespace {

class PgmScanner {
 public:
  explicit PgmScanner(std::string_view bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space_and_comments();
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(bytes_.data() + pos_, bytes_.data() + bytes_.size(), v);
    if (ec != std::errc()) throw Error(ErrorKind::parse, "undecodable image: bad PGM header");
    pos_ = static_cast<std::size_t>(ptr - bytes_.data());
    return v;
  }

  // Exactly one whitespace byte separates the header from binary raster data.
  void single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw Error(ErrorKind::parse, "undecodable image: bad PGM header");
    }
    ++pos_;
  }

  std::string_view rest() const { return bytes_.substr(pos_); }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

GrayImage decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw Error(ErrorKind::parse, "undecodable image: not a P2/P5 PGM");
  }
  const bool binary = bytes[1] == '5';
  PgmScanner scan(bytes);
  GrayImage img;
  img.width = scan.number();
  img.height = scan.number();
  const std::size_t maxval = scan.number();
  if (img.width == 0 || img.height == 0) throw Error(ErrorKind::invalid_input, "empty image");
  if (maxval == 0 || maxval > 255) throw Error(ErrorKind::parse, "undecodable image: only 8-bit PGM is supported");
  const std::size_t n = img.width * img.height;
  img.pixels.resize(n);
  if (binary) {
    scan.single_space();
    auto raster = scan.rest();
    if (raster.size() < n) throw Error(ErrorKind::parse, "undecodable image: truncated raster");
    for (std::size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<std::uint8_t>(raster[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t v = scan.number();
      if (v > maxval) throw Error(ErrorKind::parse, "undecodable image: sample above maxval");
      img.pixels[i] = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
  }
  return img;
}

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open image " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_pgm(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_pgm(const GrayImage& image, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw Error(ErrorKind::io, "write failure on " + path.string());
}

// ---------------------------------------------------------------------------
// Config

double CurationConfig::dedup_threshold_for(const std::string& class_name) const {
  return fine_grained_classes.contains(class_name) ? dedup_threshold_finegrained : dedup_threshold_common;
}

void CurationConfig::validate() const {
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    throw Error(ErrorKind::invalid_input, "outlier_fraction must be in [0,1)");
  }
  for (double t : {dedup_threshold_common, dedup_threshold_finegrained}) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorKind::invalid_input, "dedup thresholds must be in (0,1]");
  }
  if (phash_hamming_threshold < 0 || phash_hamming_threshold > 64) {
    throw Error(ErrorKind::invalid_input, "phash threshold must be in [0,64]");
  }
  if (target_per_class && *target_per_class == 0) {
    throw Error(ErrorKind::invalid_input, "target_per_class must be positive");
  }
}

// ---------------------------------------------------------------------------
// Embedding stages

namespace {

void sort_by_id(std::vector<CandidateImage>& pool) {
  std::sort(pool.begin(), pool.end(),
            [](const CandidateImage& a, const CandidateImage& b) { return a.image_id < b.image_id; });
}

// Unit-normalized copies of every embedding; zero vectors stay zero.
std::vector<std::vector<double>> unit_embeddings(std::span<const CandidateImage> pool) {
  std::vector<std::vector<double>> out;
  out.reserve(pool.size());
  std::size_t dim = 0;
  for (const auto& img : pool) {
    if (!img.embedding) throw Error(ErrorKind::invalid_input, "missing embedding for image '" + img.image_id + "'");
    if (out.empty()) dim = img.embedding->size();
    if (img.embedding->size() != dim) {
      throw Error(ErrorKind::mismatch, "embedding dimension mismatch at image '" + img.image_id + "'");
    }
    std::vector<double> u(img.embedding->begin(), img.embedding->end());
    double n = 0;
    for (double x : u) n += x * x;
    n = std::sqrt(n);
    if (n > 0)
      for (double& x : u) x /= n;
    out.push_back(std::move(u));
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> mean_pairwise_similarity(std::span<const CandidateImage> pool) {
  if (pool.size() < 2) throw Error(ErrorKind::invalid_input, "outlier scoring needs at least 2 images");
  const auto units = unit_embeddings(pool);
  // sum_j!=i cos(i, j) = u_i . (sum_j u_j) - u_i . u_i
  std::vector<double> total(units.front().size(), 0.0);
  for (const auto& u : units)
    for (std::size_t d = 0; d < u.size(); ++d) total[d] += u[d];
  std::vector<double> scores(units.size());
  const double others = static_cast<double>(units.size() - 1);
  for (std::size_t i = 0; i < units.size(); ++i) {
    scores[i] = (dot(units[i], total) - dot(units[i], units[i])) / others;
  }
  return scores;
}

Partition remove_outliers(std::vector<CandidateImage> pool, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw Error(ErrorKind::invalid_input, "outlier fraction must be in [0,1)");
  sort_by_id(pool);
  const auto scores = mean_pairwise_similarity(pool);
  const auto remove_count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool.size())));
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // ties stay in image_id order
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<bool> drop(pool.size(), false);
  for (std::size_t i = 0; i < remove_count; ++i) drop[order[i]] = true;
  Partition out;
  for (std::size_t i = 0; i < pool.size(); ++i) (drop[i] ? out.removed : out.kept).push_back(std::move(pool[i]));
  return out;
}

namespace {

template <typename ThresholdFn>
Partition greedy_soft_dedup(std::vector<CandidateImage> pool, ThresholdFn&& threshold_for) {
  sort_by_id(pool);
  const auto units = unit_embeddings(pool);
  std::vector<std::size_t> kept;
  Partition out;
  std::vector<bool> is_kept(pool.size(), false);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double threshold = threshold_for(pool[i]);
    bool duplicate = false;
    for (auto k : kept) {
      if (dot(units[i], units[k]) > threshold) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      kept.push_back(i);
      is_kept[i] = true;
    }
  }
  for (std::size_t i = 0; i < pool.size(); ++i) (is_kept[i] ? out.kept : out.removed).push_back(std::move(pool[i]));
  return out;
}

}  // namespace

Partition soft_dedup(std::vector<CandidateImage> pool, const CurationConfig& config) {
  return greedy_soft_dedup(std::move(pool),
                           [&](const CandidateImage& img) { return config.dedup_threshold_for(img.class_name); });
}

Partition soft_dedup(std::vector<CandidateImage> pool, double threshold) {
  return greedy_soft_dedup(std::move(pool), [threshold](const CandidateImage&) { return threshold; });
}

// ---------------------------------------------------------------------------
// Perceptual hash

namespace {

constexpr std::size_t kHashCols = 9;
constexpr std::size_t kHashRows = 8;

// Half-pixel-centre bilinear sampling.
std::array<double, kHashCols * kHashRows> resize_bilinear(const GrayImage& img) {
  std::array<double, kHashCols * kHashRows> out{};
  const double sx = static_cast<double>(img.width) / kHashCols;
  const double sy = static_cast<double>(img.height) / kHashRows;
  auto coord = [](double dst, double scale, std::size_t extent, std::size_t& i0, std::size_t& i1, double& frac) {
    double src = (dst + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(extent - 1));
    i0 = static_cast<std::size_t>(std::floor(src));
    i1 = std::min(i0 + 1, extent - 1);
    frac = src - static_cast<double>(i0);
  };
  for (std::size_t r = 0; r < kHashRows; ++r) {
    std::size_t y0, y1;
    double fy;
    coord(static_cast<double>(r), sy, img.height, y0, y1, fy);
    for (std::size_t c = 0; c < kHashCols; ++c) {
      std::size_t x0, x1;
      double fx;
      coord(static_cast<double>(c), sx, img.width, x0, x1, fx);
      const double top = img.at(y0, x0) * (1 - fx) + img.at(y0, x1) * fx;
      const double bottom = img.at(y1, x0) * (1 - fx) + img.at(y1, x1) * fx;
      out[r * kHashCols + c] = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

}  // namespace

std::uint64_t compute_phash(const GrayImage& image) {
  if (image.width == 0 || image.height == 0 || image.pixels.size() != image.width * image.height) {
    throw Error(ErrorKind::invalid_input, "undecodable image: empty or inconsistent raster");
  }
  const auto small = resize_bilinear(image);
  std::uint64_t hash = 0;
  for (std::size_t r = 0; r < kHashRows; ++r) {
    for (std::size_t c = 0; c + 1 < kHashCols; ++c) {
      hash = (hash << 1) | (small[r * kHashCols + c] > small[r * kHashCols + c + 1] ? 1u : 0u);
    }
  }
  return hash;
}

int hamming_distance(std::uint64_t a, std::uint64_t b) noexcept { return std::popcount(a ^ b); }

Partition phash_dedup(std::vector<CandidateImage> pool, int hamming_threshold) {
  if (hamming_threshold < 0 || hamming_threshold > 64) {
    throw Error(ErrorKind::invalid_input, "phash threshold must be in [0,64]");
  }
  sort_by_id(pool);
  for (auto& img : pool) {
    if (img.phash) continue;
    if (!img.pixels) throw Error(ErrorKind::invalid_input, "missing phash for image '" + img.image_id + "'");
    img.phash = compute_phash(*img.pixels);
  }
  std::map<std::string, std::vector<std::uint64_t>> kept_hashes;
  Partition out;
  for (auto& img : pool) {
    auto& kept = kept_hashes[img.class_name];
    bool duplicate = std::any_of(kept.begin(), kept.end(), [&](std::uint64_t h) {
      return hamming_distance(h, *img.phash) <= hamming_threshold;
    });
    if (!duplicate) kept.push_back(*img.phash);
    (duplicate ? out.removed : out.kept).push_back(std::move(img));
  }
  return out;
}

Partition apply_exclusions(std::vector<CandidateImage> pool, const std::set<std::string>& excluded_ids) {
  sort_by_id(pool);
  Partition out;
  for (auto& img : pool) (excluded_ids.contains(img.image_id) ? out.removed : out.kept).push_back(std::move(img));
  return out;
}

std::vector<CandidateImage> balance_classes(std::vector<CandidateImage> pool, std::size_t target) {
  if (target == 0) throw Error(ErrorKind::invalid_input, "balance target must be positive");
  sort_by_id(pool);
  std::map<std::string, std::size_t> counts;
  for (const auto& img : pool) ++counts[img.class_name];
  std::string deficient;
  for (const auto& [name, count] : counts) {
    if (count < target) {
      if (!deficient.empty()) deficient += ", ";
      deficient += name + " (" + std::to_string(count) + ")";
    }
  }
  if (!deficient.empty()) {
    throw Error(ErrorKind::invalid_input,
                "classes below the balance target of " + std::to_string(target) + ": " + deficient);
  }
  std::map<std::string, std::size_t> taken;
  std::vector<CandidateImage> out;
  for (auto& img : pool) {
    if (taken[img.class_name]++ < target) out.push_back(std::move(img));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

StageReport report_stage(std::string stage, const Partition& p) {
  StageReport r;
  r.stage = std::move(stage);
  r.kept = p.kept.size();
  r.removed = p.removed.size();
  r.input = r.kept + r.removed;
  for (const auto& img : p.kept) ++r.per_class[img.class_name].kept;
  for (const auto& img : p.removed) ++r.per_class[img.class_name].removed;
  return r;
}

}  // namespace

CurationResult run_curation(std::vector<CandidateImage> pool, const CurationConfig& config,
                            const std::set<std::string>& excluded_ids) {
  config.validate();
  CurationResult result;
  auto run = [&](std::string name, Partition p) {
    result.stages.push_back(report_stage(std::move(name), p));
    return std::move(p.kept);
  };
  if (pool.size() >= 2) {
    pool = run("outlier_removal", remove_outliers(std::move(pool), config.outlier_fraction));
  } else {
    pool = run("outlier_removal", Partition{std::move(pool), {}});
  }
  pool = run("soft_dedup", soft_dedup(std::move(pool), config));
  pool = run("manual_exclusion", apply_exclusions(std::move(pool), excluded_ids));
  pool = run("phash_dedup", phash_dedup(std::move(pool), config.phash_hamming_threshold));

  std::size_t target = 0;
  if (config.target_per_class) {
    target = *config.target_per_class;
  } else if (!pool.empty()) {
    std::map<std::string, std::size_t> counts;
    for (const auto& img : pool) ++counts[img.class_name];
    target = std::min_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
               return a.second < b.second;
             })->second;
  }
  Partition balanced;
  if (target > 0) {
    std::set<std::string> kept_ids;
    balanced.kept = balance_classes(pool, target);
    for (const auto& img : balanced.kept) kept_ids.insert(img.image_id);
    for (auto& img : pool)
      if (!kept_ids.contains(img.image_id)) balanced.removed.push_back(std::move(img));
  }
  result.final_pool = run("class_balance", std::move(balanced));
  return result;
}

std::vector<CandidateImage> load_candidate_pool(const fs::path& path, const EmbeddingMatrix* embeddings,
                                                const std::optional<fs::path>& images_dir) {
  CsvReader reader(path, {"image_id", "class_name", "embedding_row", "phash_hex"});
  std::vector<CandidateImage> pool;
  std::set<std::string> ids;
  std::vector<std::string> f;
  while (reader.next(f)) {
    CandidateImage img;
    img.image_id = std::string(trim(f[0]));
    img.class_name = std::string(trim(f[1]));
    if (img.image_id.empty() || img.class_name.empty()) {
      throw Error(ErrorKind::parse, reader.where() + "image_id and class_name are required");
    }
    if (!ids.insert(img.image_id).second) {
      throw Error(ErrorKind::invalid_input, reader.where() + "duplicate image_id '" + img.image_id + "'");
    }
    if (!trim(f[2]).empty()) {
      std::uint64_t row = 0;
      if (!parse_uint64(f[2], row)) throw Error(ErrorKind::parse, reader.where() + "bad embedding_row");
      if (!embeddings || row >= embeddings->rows()) {
        throw Error(ErrorKind::invalid_input, reader.where() + "embedding_row " + std::to_string(row) +
                                                  " is not in the embedding file");
      }
      auto r = embeddings->row(row);
      img.embedding = std::vector<float>(r.begin(), r.end());
    }
    if (auto hex = trim(f[3]); !hex.empty()) {
      std::uint64_t h = 0;
      auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), h, 16);
      if (ec != std::errc() || ptr != hex.data() + hex.size() || hex.size() > 16) {
        throw Error(ErrorKind::parse, reader.where() + "bad phash_hex '" + std::string(hex) + "'");
      }
      img.phash = h;
    } else if (images_dir) {
      img.pixels = read_pgm(*images_dir / (img.image_id + ".pgm"));
    }
    pool.push_back(std::move(img));
  }
  return pool;
}

std::set<std::string> load_exclusions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open exclusion list " + path.string());
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    auto id = trim(line);
    if (!id.empty() && id.front() != '#') ids.emplace(id);
  }
  return ids;
}

}  // namespace conceptscope
