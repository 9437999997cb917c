// Shared fixtures and reference implementations for the test binaries.
#ifndef LMKIT_TESTS_SUPPORT_HH
#define LMKIT_TESTS_SUPPORT_HH

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmkit/counts.hh"
#include "lmkit/lattice.hh"
#include "lmkit/model.hh"
#include "lmkit/synth.hh"
#include "lmkit/vocab.hh"

namespace lmtest {

using namespace lmkit;

std::vector<Sentence> corpus_of(std::initializer_list<const char *> lines);

// Corpus from a small synthetic source: `words` distinct words, `classes` classes.
std::vector<Sentence> synthetic_corpus(uint64_t seed, std::size_t sentences, std::size_t words = 300,
                                       std::size_t classes = 12);

struct Trained {
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const BackoffModel> model;
  std::vector<IdSentence> ids;
};

// vocab -> count -> adjust -> estimate.  When `vocab` is given it is used as is.
Trained train(const std::vector<Sentence> &corpus, int order, const DiscountConfig &discounts,
              std::shared_ptr<const Vocabulary> vocab = nullptr);

// Interpolated modified Kneser-Ney written straight from the textbook
// recursion over raw padded windows: no count tables, no backoff weights.
class KnOracle {
 public:
  KnOracle(const std::vector<IdSentence> &corpus, int order, std::size_t vocab_size,
           std::optional<Discounts> fixed = std::nullopt);

  // P(ngram.back() | ngram prefix) at order ngram.size().
  double prob(const std::vector<WordId> &ngram) const;
  const Discounts &discounts(int k) const { return discounts_[k - 1]; }

 private:
  double count(const std::vector<WordId> &g) const;  // the count KN uses at order |g|
  double prob_at(std::vector<WordId> ctx, WordId w) const;

  int order_;
  std::size_t vocab_size_;
  std::map<std::vector<WordId>, double> raw_;
  std::map<std::vector<WordId>, double> continuation_;
  // Per order: history -> (total, discounted mass).
  std::vector<std::map<std::vector<WordId>, std::pair<double, double>>> history_stats_;
  std::vector<Discounts> discounts_;
};

// Sum over the whole vocabulary of P(w | history).
double probability_sum(const LanguageModel &model, const std::vector<WordId> &history);

// Every stored history (keys of orders 1..n-1 that have children).
std::vector<std::vector<WordId>> stored_histories(const BackoffModel &model);

// Relative-entropy cost of removing one entry, summed over the whole
// vocabulary with the backoff of the history renormalized by direct sums.
double brute_prune_cost(const BackoffModel &model, const std::vector<WordId> &ngram);

// Edit distance by enumerating all monotone alignments.  Returns (S, D, I)
// of the cheapest alignment; ties go to the one aligning most pairs.
struct Edits {
  std::size_t sub = 0, del = 0, ins = 0;
};
Edits brute_edits(const std::vector<std::string> &hyp, const std::vector<std::string> &ref);

struct Path {
  std::vector<std::string> words;
  std::vector<double> features;
  std::vector<std::size_t> edges;
};
// All complete start-to-final paths by depth-first search.
std::vector<Path> enumerate_paths(const Lattice &lattice);

// A random complete path: uniform choice among out edges and, at final nodes
// with successors, stopping.
Path random_path(const Lattice &lattice, Rng &rng);

// Direct sentence log10 probability including </s>.
double sentence_log10(const LanguageModel &lm, const std::vector<std::string> &words);

std::string data_path(const std::string &name);

}  // namespace lmtest

#endif  // LMKIT_TESTS_SUPPORT_HH
