#ifndef LMKIT_TUNE_HH
#define LMKIT_TUNE_HH

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lmkit/lattice.hh"
#include "lmkit/weights.hh"

namespace lmkit {

struct TuneItem {
  Lattice lattice;
  std::vector<std::string> reference;
};

struct TuneSet {
  std::vector<std::string> labels;
  std::vector<TuneItem> items;
};

// Checks the set is non-empty, references are non-empty and every lattice
// carries the same label list.  Throws EmptyTuneSet, EmptyReference,
// EmptyLattice or LabelMismatch.
TuneSet make_tune_set(std::vector<TuneItem> items);

// Manifest lines are `lattice_path<TAB>reference words`; relative paths are
// resolved against the manifest's directory.
TuneSet read_tune_manifest(const std::string &path);

struct Line {
  double offset = 0;
  double slope = 0;
  std::size_t errors = 0;
};

struct EnvelopeInterval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::size_t line = 0;  // index of the winning line
  std::size_t errors = 0;
};

struct Envelope {
  std::vector<EnvelopeInterval> intervals;  // left to right, covering the real line
  std::size_t best = 0;                     // argmin by errors, then width, then position
};

// Upper envelope of score(g) = offset + slope * g.  Among identical lines the
// lowest index wins.
Envelope envelope_sweep(std::span<const Line> lines);

// Picks the argmin interval: fewest errors, then widest, then leftmost.
std::size_t best_interval(std::span<const EnvelopeInterval> intervals);

// Point chosen inside an interval: the midpoint, or one unit past the finite
// end of an unbounded interval (0 when both ends are unbounded).
double interval_point(const EnvelopeInterval &interval);

struct MertOptions {
  std::size_t max_rounds = 10;
  std::size_t nbest_size = 100;
  // Search directions over the label order of the tune set; empty means the
  // coordinate axes.
  std::vector<std::vector<double>> directions;
  std::size_t restarts = 0;  // extra random starting points
  uint64_t seed = 1;
};

struct MertResult {
  WeightVector weights;
  double initial_wer = 0;
  double final_wer = 0;
  std::vector<double> wer_trace;  // corpus WER after each accepted round, starting with init
  std::size_t rounds = 0;
};

// Corpus WER of the best paths under `weights`.
double tune_set_wer(const TuneSet &ts, const WeightVector &weights);

// N-best MERT with cumulative hypothesis pools and exact line searches.
// Returns weights whose corpus WER is never above that of `init`.
MertResult mert(const TuneSet &ts, const WeightVector &init, const MertOptions &options = {});

}  // namespace lmkit

#endif  // LMKIT_TUNE_HH
