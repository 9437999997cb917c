#ifndef LMKIT_MODEL_HH
#define LMKIT_MODEL_HH

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lmkit/counts.hh"
#include "lmkit/ngram_index.hh"
#include "lmkit/types.hh"
#include "lmkit/vocab.hh"

namespace lmkit {

// Anything that can score a word given its left context.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual int order() const = 0;
  virtual const Vocabulary &vocab() const = 0;

  // log10 P(word | history).  Only the last order()-1 history ids are used.
  virtual double log10_prob(std::span<const WordId> history, WordId word) const = 0;
};

struct EntryValues {
  double logprob = 0;  // log10
  double backoff = 0;  // log10; 0 at the highest order
};

// Backoff recursion over exact-entry lookups: the longest stored suffix of
// context+word supplies the probability, and each longer history that misses
// contributes its backoff weight.  `lookup(span) -> std::optional<EntryValues>`.
// Local and remote scoring both go through this function, which is what makes
// their results bit-identical.
template <class Lookup>
double compose_backoff(std::span<const WordId> context, WordId word, Lookup &&lookup) {
  constexpr std::size_t kInline = 16;
  WordId inline_buf[kInline];
  std::vector<WordId> heap_buf;
  WordId *full = inline_buf;
  if (context.size() + 1 > kInline) {
    heap_buf.resize(context.size() + 1);
    full = heap_buf.data();
  }
  std::copy(context.begin(), context.end(), full);
  full[context.size()] = word;

  double backoff_sum = 0;
  for (std::size_t len = context.size();; --len) {
    std::size_t start = context.size() - len;
    if (auto hit = lookup(std::span<const WordId>(full + start, len + 1))) return backoff_sum + hit->logprob;
    if (len == 0) return backoff_sum + kLogZero;
    if (auto hist = lookup(std::span<const WordId>(full + start, len))) backoff_sum += hist->backoff;
  }
}

// Backoff n-gram model with log10 probabilities and backoff weights, the
// format an ARPA file describes.  Level 1 holds every vocabulary id, so the
// unigram of id i is entry i.  Immutable; concurrent queries are safe.
class BackoffModel final : public LanguageModel {
 public:
  struct Level {
    NgramIndex keys;
    std::vector<double> logprob;
    std::vector<double> backoff;  // empty at the highest order
  };

  // Validates sortedness, the dense unigram level and prefix closure.
  BackoffModel(std::shared_ptr<const Vocabulary> vocab, std::vector<Level> levels);

  int order() const override { return static_cast<int>(levels_.size()); }
  const Vocabulary &vocab() const override { return *vocab_; }
  const std::shared_ptr<const Vocabulary> &vocab_ptr() const { return vocab_; }

  double log10_prob(std::span<const WordId> history, WordId word) const override;

  std::optional<EntryValues> find(std::span<const WordId> ngram) const;

  const Level &level(int n) const { return levels_.at(n - 1); }
  std::size_t size(int n) const { return levels_.at(n - 1).keys.size(); }
  std::size_t total_size() const;
  std::vector<std::size_t> sizes() const;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  std::vector<Level> levels_;
};

// Truncates a history to its last `keep` ids.
inline std::span<const WordId> last_ids(std::span<const WordId> history, std::size_t keep) {
  return history.size() > keep ? history.subspan(history.size() - keep) : history;
}

// Recomputes every backoff weight bottom-up so each history is normalized:
//   bow(h) = (1 - sum_{v: hv stored} P(v|h)) / (1 - sum_{v: hv stored} P(v|h'))
// with P(.|h') taken from the already renormalized lower orders.  Histories
// whose children cover every predictable word get log backoff 0.
void renormalize_backoffs(std::vector<BackoffModel::Level> &levels, std::size_t vocab_size);

// Modified Kneser-Ney discounts for counts 1, 2 and 3+.
struct Discounts {
  double d1 = 0, d2 = 0, d3plus = 0;

  double for_count(Count c) const { return c == 0 ? 0 : c == 1 ? d1 : c == 2 ? d2 : d3plus; }
};

struct DiscountConfig {
  bool automatic = true;
  // Explicit mode: one entry applied to every order, or one per order.
  std::vector<Discounts> explicit_discounts;

  static DiscountConfig auto_estimate() { return {}; }
  static DiscountConfig fixed(double d) { return {false, {{d, d, d}}}; }
};

// Discounts from the count-of-counts n1..n4 of order n:
//   Y = n1/(n1+2 n2), D1 = 1-2Y n2/n1, D2 = 2-3Y n3/n2, D3+ = 3-4Y n4/n3.
// Throws DegenerateDiscounts when a ratio is undefined or a discount leaves [0, c].
Discounts auto_discounts(const CountTable &adjusted, int n);

// Interpolated modified Kneser-Ney estimate from adjusted counts.  The
// unigram distribution is interpolated with a uniform distribution over every
// predictable word (all ids except <s>), so no word has zero probability.
BackoffModel estimate_kn(const CountTable &adjusted, std::shared_ptr<const Vocabulary> vocab,
                         const DiscountConfig &discounts = DiscountConfig::auto_estimate());

// Discounts actually used by estimate_kn, one per order.
std::vector<Discounts> resolve_discounts(const CountTable &adjusted, const DiscountConfig &config);

}  // namespace lmkit

#endif  // LMKIT_MODEL_HH
