#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace conceptscope {

/// Dense 0-based position of a sample in a corpus' deterministic stream.
using SampleIndex = std::uint32_t;

/// Strictly increasing list of sample indices.
class PostingList {
 public:
  PostingList() = default;

  /// Takes an already strictly increasing list; throws otherwise.
  explicit PostingList(std::vector<SampleIndex> sorted_unique);

  /// Sorts and deduplicates.
  static PostingList from_unsorted(std::vector<SampleIndex> indices);

  std::span<const SampleIndex> indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }
  SampleIndex back() const { return indices_.back(); }

  /// Appends an index larger than every stored one; equal to back() is a
  /// no-op so per-sample repeats collapse.
  void append(SampleIndex index);

  bool contains(SampleIndex index) const noexcept;

  std::vector<SampleIndex> release() && noexcept { return std::move(indices_); }

  bool operator==(const PostingList&) const = default;

 private:
  std::vector<SampleIndex> indices_;
};

/// Intersection of sorted lists, smallest first, galloping through the
/// larger lists. Throws on an empty list of lists.
PostingList intersect(std::span<const std::span<const SampleIndex>> lists);
PostingList intersect(const PostingList& a, const PostingList& b);

}  // namespace conceptscope
