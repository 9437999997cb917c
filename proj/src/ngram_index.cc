#include "lmkit/ngram_index.hh"

#include <numeric>

namespace lmkit {

namespace {

// Compares the first prefix.size() ids of entry i against prefix.
int compare_prefix(const NgramIndex &index, std::size_t i, std::span<const WordId> prefix) {
  std::span<const WordId> k = index.key(i);
  for (std::size_t j = 0; j < prefix.size(); ++j) {
    if (k[j] < prefix[j]) return -1;
    if (k[j] > prefix[j]) return 1;
  }
  return 0;
}

}  // namespace

std::optional<std::size_t> NgramIndex::find(std::span<const WordId> key) const {
  if (static_cast<int>(key.size()) != length_ || length_ == 0) return std::nullopt;
  std::size_t lo = 0, hi = size();
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    int c = compare_prefix(*this, mid, key);
    if (c == 0) return mid;
    if (c < 0) lo = mid + 1; else hi = mid;
  }
  return std::nullopt;
}

std::pair<std::size_t, std::size_t> NgramIndex::prefix_range(std::span<const WordId> prefix) const {
  std::size_t lo = 0, hi = size();
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (compare_prefix(*this, mid, prefix) < 0) lo = mid + 1; else hi = mid;
  }
  std::size_t begin = lo;
  hi = size();
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (compare_prefix(*this, mid, prefix) <= 0) lo = mid + 1; else hi = mid;
  }
  return {begin, lo};
}

bool NgramIndex::is_sorted_unique() const {
  for (std::size_t i = 1; i < size(); ++i) {
    if (!key_less(key(i - 1), key(i))) return false;
  }
  return true;
}

std::vector<std::size_t> sort_order(const std::vector<WordId> &ids, int length) {
  std::size_t n = length ? ids.size() / length : 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const WordId *base = ids.data();
  std::sort(order.begin(), order.end(), [base, length](std::size_t a, std::size_t b) {
    const WordId *x = base + a * length;
    const WordId *y = base + b * length;
    return std::lexicographical_compare(x, x + length, y, y + length);
  });
  return order;
}

}  // namespace lmkit
