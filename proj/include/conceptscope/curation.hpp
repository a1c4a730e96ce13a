#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "conceptscope/corpus_io.hpp"

namespace conceptscope {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

/// Binary (P5) or ASCII (P2) PGM with maxval <= 255.
GrayImage decode_pgm(std::string_view bytes);
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

struct CandidateImage {
  std::string image_id;
  std::string class_name;
  std::optional<std::vector<float>> embedding;
  std::optional<std::uint64_t> phash;
  std::optional<GrayImage> pixels;
};

struct CurationConfig {
  double outlier_fraction = 0.05;
  double dedup_threshold_common = 0.9;
  double dedup_threshold_finegrained = 0.95;
  int phash_hamming_threshold = 10;
  std::optional<std::size_t> target_per_class;  // unset: smallest surviving class size
  std::set<std::string> fine_grained_classes;

  double dedup_threshold_for(const std::string& class_name) const;
  void validate() const;
};

/// Every stage splits its input; both halves are sorted by image_id.
struct Partition {
  std::vector<CandidateImage> kept;
  std::vector<CandidateImage> removed;
};

/// Mean cosine similarity of each image to every other image in the pool.
std::vector<double> mean_pairwise_similarity(std::span<const CandidateImage> pool);

/// Removes the floor(fraction * n) images with the lowest mean similarity to
/// the rest of the pool (ties removed in ascending image_id order).
Partition remove_outliers(std::vector<CandidateImage> pool, double fraction);

/// Greedy scan in ascending image_id: an image is dropped iff its cosine
/// similarity to an already kept image is strictly above the threshold of
/// its class.
Partition soft_dedup(std::vector<CandidateImage> pool, const CurationConfig& config);
Partition soft_dedup(std::vector<CandidateImage> pool, double threshold);

/// Difference hash: bilinear resize to 9x8, bit set where a pixel is brighter
/// than its right neighbour, row-major from the most significant bit.
std::uint64_t compute_phash(const GrayImage& image);
int hamming_distance(std::uint64_t a, std::uint64_t b) noexcept;

/// Per class, greedy in ascending image_id: dropped iff within
/// `hamming_threshold` bits of an already kept image of the same class.
/// Missing hashes are computed from pixels when available.
Partition phash_dedup(std::vector<CandidateImage> pool, int hamming_threshold);

/// Drops images listed by the operator after manual review.
Partition apply_exclusions(std::vector<CandidateImage> pool, const std::set<std::string>& excluded_ids);

/// First `target` images per class by image_id. Throws, naming every class
/// with fewer than `target` images.
std::vector<CandidateImage> balance_classes(std::vector<CandidateImage> pool, std::size_t target);

struct ClassCounts {
  std::size_t kept = 0;
  std::size_t removed = 0;
};

struct StageReport {
  std::string stage;
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t removed = 0;
  std::map<std::string, ClassCounts> per_class;
};

struct CurationResult {
  std::vector<CandidateImage> final_pool;
  std::vector<StageReport> stages;
};

/// outliers -> soft dedup -> manual exclusions -> phash dedup -> balance.
CurationResult run_curation(std::vector<CandidateImage> pool, const CurationConfig& config,
                            const std::set<std::string>& excluded_ids = {});

/// Pool CSV `image_id,class_name,embedding_row,phash_hex`. Empty cells leave
/// the field unset. With `images_dir`, `<image_id>.pgm` is loaded for rows
/// without a hash.
std::vector<CandidateImage> load_candidate_pool(const std::filesystem::path& path, const EmbeddingMatrix* embeddings,
                                                const std::optional<std::filesystem::path>& images_dir = {});

/// One image_id per line.
std::set<std::string> load_exclusions(const std::filesystem::path& path);

}  // namespace conceptscope
