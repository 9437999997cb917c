#ifndef LMKIT_COUNTS_HH
#define LMKIT_COUNTS_HH

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lmkit/ngram_index.hh"
#include "lmkit/types.hh"
#include "lmkit/vocab.hh"

namespace lmkit {

// N-gram occurrence counts for lengths 1..order.  Each order is a sorted
// NgramIndex with a parallel count array; every stored count is >= 1.
//
// Only n-grams that end in a predicted word are stored: the begin symbol is
// context, never an event.  When `adjusted()` is set the lower orders hold
// Kneser-Ney continuation counts instead of raw counts.
class CountTable {
 public:
  explicit CountTable(int order);

  int order() const { return static_cast<int>(levels_.size()); }
  bool adjusted() const { return adjusted_; }

  const NgramIndex &keys(int n) const { return levels_.at(n - 1).keys; }
  const std::vector<Count> &counts(int n) const { return levels_.at(n - 1).counts; }
  std::size_t size(int n) const { return keys(n).size(); }
  std::size_t total_size() const;

  // 0 when absent.
  Count get(std::span<const WordId> ngram) const;

  bool operator==(const CountTable &other) const;

  // Sums duplicate keys; drops zero counts.  flat_keys[n-1] holds n-tuples.
  static CountTable from_unsorted(int order, std::vector<std::vector<WordId>> flat_keys,
                                  std::vector<std::vector<Count>> counts, bool adjusted);

 private:
  struct Level {
    NgramIndex keys;
    std::vector<Count> counts;
  };
  std::vector<Level> levels_;
  bool adjusted_ = false;
};

// Counts all 1..order-grams ending at each predicted position of every
// sentence padded with order-1 begin symbols and one end symbol.
CountTable count_ngrams(std::span<const IdSentence> sentences, int order);

// Entrywise sum of two raw tables of equal order.
CountTable merge_counts(const CountTable &a, const CountTable &b);

// Replaces lower-order counts with the number of distinct left extensions,
// except for n-grams starting with <s>, which keep their raw count.
CountTable adjust_counts_kn(const CountTable &raw);

// Number of entries of order n whose count is exactly c (c in 1..max_c),
// index 0 unused.  Computed on demand from the table.
std::vector<Count> count_of_counts(const CountTable &table, int n, int max_c);

// `w1 w2 ... wk<TAB>count`, all orders interleaved in lexicographic id order.
void write_counts(const CountTable &table, const Vocabulary &vocab, std::ostream &out);
// Order is the longest n-gram seen unless given (> 0).  Words must be in vocab.
CountTable read_counts(std::istream &in, const Vocabulary &vocab, int order = 0);
void write_counts_file(const CountTable &table, const Vocabulary &vocab, const std::string &path);
CountTable read_counts_file(const std::string &path, const Vocabulary &vocab, int order = 0);

}  // namespace lmkit

#endif  // LMKIT_COUNTS_HH
