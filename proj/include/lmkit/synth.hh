#ifndef LMKIT_SYNTH_HH
#define LMKIT_SYNTH_HH

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lmkit/lattice.hh"
#include "lmkit/types.hh"

namespace lmkit {

// mt19937_64 with sampling done by hand, so draws are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::size_t below(std::size_t n);  // [0, n), unbiased
  double normal();                   // Box-Muller
  bool chance(double p) { return unit() < p; }
  // Index drawn proportionally to nonnegative weights.
  std::size_t pick(const std::vector<double> &cumulative);

 private:
  std::mt19937_64 engine_;
};

// Running sums for Rng::pick.
std::vector<double> cumulative(const std::vector<double> &weights);

struct LexiconConfig {
  uint64_t seed = 7;
  std::size_t words = 4000;
  std::size_t classes = 40;
};

// Class-based second-order Markov text source over a pseudo-word lexicon.
// Sources built from the same lexicon config share words and classes; the
// domain seed fixes class transitions, in-class word ranks and collocations.
class TextSource {
 public:
  TextSource(const LexiconConfig &lexicon, uint64_t domain_seed);

  const std::vector<std::string> &words() const { return words_; }
  Sentence sample(Rng &rng) const;
  std::vector<Sentence> corpus(std::size_t sentences, uint64_t seed) const;

 private:
  std::vector<std::string> words_;
  std::vector<std::vector<std::size_t>> members_;         // class -> words by rank
  std::vector<std::vector<double>> emit_;                 // class -> cumulative rank weights
  std::vector<std::vector<double>> transition_;           // (c1 * (C+1) + c2) -> cumulative over C classes + end
  std::vector<std::size_t> follower_;                     // collocation partner per word
  std::vector<std::size_t> class_of_;
  std::size_t classes_ = 0;
};

struct LatticeNoise {
  std::size_t confusions = 3;     // competing words per reference position
  double confusion_gap = 1.2;     // mean acoustic disadvantage of a confusion
  double acoustic_sigma = 0.8;    // per-edge acoustic noise
  double deletion_rate = 0.08;    // one edge spanning two reference words
  double insertion_rate = 0.08;   // two edges covering one reference word
};

// Confusion-style lattice around a reference with features "ac" (acoustic
// log score) and "ins" (1 per word).
Lattice noisy_lattice(const Sentence &reference, const std::vector<std::string> &lexicon, const LatticeNoise &noise,
                      Rng &rng);

}  // namespace lmkit

#endif  // LMKIT_SYNTH_HH
