#include "conceptscope/posting_list.hpp"

#include <algorithm>

#include "conceptscope/error.hpp"

namespace conceptscope {

PostingList::PostingList(std::vector<SampleIndex> sorted_unique) : indices_(std::move(sorted_unique)) {
  if (std::adjacent_find(indices_.begin(), indices_.end(),
                         [](SampleIndex a, SampleIndex b) { return a >= b; }) != indices_.end()) {
    throw Error(ErrorKind::invalid_input, "posting list is not strictly increasing");
  }
}

PostingList PostingList::from_unsorted(std::vector<SampleIndex> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  PostingList out;
  out.indices_ = std::move(indices);
  return out;
}

void PostingList::append(SampleIndex index) {
  if (!indices_.empty()) {
    if (index == indices_.back()) return;
    if (index < indices_.back()) {
      throw Error(ErrorKind::invalid_input, "posting list append out of order");
    }
  }
  indices_.push_back(index);
}

bool PostingList::contains(SampleIndex index) const noexcept {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

namespace {

// First position in [from, hay.size()) whose value is >= target, found by
// exponential probing then binary search.
std::size_t gallop(std::span<const SampleIndex> hay, std::size_t from, SampleIndex target) {
  std::size_t step = 1;
  std::size_t hi = from;
  while (hi < hay.size() && hay[hi] < target) {
    from = hi + 1;
    hi += step;
    step <<= 1;
  }
  hi = std::min(hi, hay.size());
  return static_cast<std::size_t>(
      std::lower_bound(hay.begin() + static_cast<std::ptrdiff_t>(from),
                       hay.begin() + static_cast<std::ptrdiff_t>(hi), target) -
      hay.begin());
}

void intersect_into(std::vector<SampleIndex>& candidates, std::span<const SampleIndex> other) {
  std::size_t out = 0;
  std::size_t pos = 0;
  for (SampleIndex v : candidates) {
    pos = gallop(other, pos, v);
    if (pos == other.size()) break;
    if (other[pos] == v) candidates[out++] = v;
  }
  candidates.resize(out);
}

}  // namespace

PostingList intersect(std::span<const std::span<const SampleIndex>> lists) {
  if (lists.empty()) throw Error(ErrorKind::invalid_input, "intersect needs at least one list");
  std::vector<std::span<const SampleIndex>> order(lists.begin(), lists.end());
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.size() < b.size(); });
  std::vector<SampleIndex> result(order.front().begin(), order.front().end());
  for (std::size_t i = 1; i < order.size() && !result.empty(); ++i) intersect_into(result, order[i]);
  PostingList out;
  out = PostingList(std::move(result));
  return out;
}

PostingList intersect(const PostingList& a, const PostingList& b) {
  const std::span<const SampleIndex> lists[] = {a.indices(), b.indices()};
  return intersect(lists);
}

}  // namespace conceptscope
