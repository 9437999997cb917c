#ifndef LMKIT_NGRAM_INDEX_HH
#define LMKIT_NGRAM_INDEX_HH

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lmkit/types.hh"

namespace lmkit {

inline bool key_less(std::span<const WordId> a, std::span<const WordId> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Flat, lexicographically sorted array of fixed-length id tuples.  Entries
// sharing a prefix are contiguous, so the children of a history form one range.
class NgramIndex {
 public:
  NgramIndex() = default;
  explicit NgramIndex(int length) : length_(length) {}

  int length() const { return length_; }
  std::size_t size() const { return length_ ? ids_.size() / length_ : 0; }
  bool empty() const { return ids_.empty(); }

  std::span<const WordId> key(std::size_t i) const {
    return {ids_.data() + i * length_, static_cast<std::size_t>(length_)};
  }

  std::optional<std::size_t> find(std::span<const WordId> key) const;

  // Entries whose key starts with `prefix` (prefix.size() <= length()).
  std::pair<std::size_t, std::size_t> prefix_range(std::span<const WordId> prefix) const;

  // Caller keeps the order sorted and unique; is_sorted_unique() checks it.
  void push_back(std::span<const WordId> key) { ids_.insert(ids_.end(), key.begin(), key.end()); }
  void reserve(std::size_t n) { ids_.reserve(n * length_); }
  bool is_sorted_unique() const;

  const std::vector<WordId> &data() const { return ids_; }

 private:
  int length_ = 0;
  std::vector<WordId> ids_;
};

// Permutation that sorts the `length`-tuples stored flat in `ids`.
std::vector<std::size_t> sort_order(const std::vector<WordId> &ids, int length);

}  // namespace lmkit

#endif  // LMKIT_NGRAM_INDEX_HH
