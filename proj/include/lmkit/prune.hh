#ifndef LMKIT_PRUNE_HH
#define LMKIT_PRUNE_HH

#include <cstddef>
#include <vector>

#include "lmkit/model.hh"

namespace lmkit {

// Relative-entropy cost of removing each entry of order >= 2 from `model`,
// indexed [n-1][i] parallel to the level keys (level 1 is empty).  For an
// entry hw with history marginal P(h):
//   cost = P(h) * [ p ln(p / (bow' q)) + U ln(bow / bow') ]
// where p = P(w|h), q = P(w|h'), U is the unseen mass behind bow(h) and
// bow' is the renormalized backoff once hw is gone.  Entries that predict
// <s> only serve as histories and score -inf.
std::vector<std::vector<double>> entropy_scores(const BackoffModel &model);

// Marginal probability of a history under the model; leading <s> symbols are given.
double history_probability(const BackoffModel &model, std::span<const WordId> history);

// Keep-flags for every entry at `threshold`: unigrams always, an entry of order
// >= 2 when its cost exceeds the threshold or it prefixes a kept entry.
std::vector<std::vector<bool>> retained_entries(const BackoffModel &model,
                                                const std::vector<std::vector<double>> &scores, double threshold);

// Keeps the flagged entries with their original probabilities and renormalizes backoffs.
BackoffModel apply_retention(const BackoffModel &model, const std::vector<std::vector<bool>> &keep);

// Single pass: every decision is scored against the unpruned model.
BackoffModel prune_entropy(const BackoffModel &model, double threshold);

struct PruneToSizeResult {
  BackoffModel model;
  double threshold = 0;
  int probes = 0;
};

// Largest model with at most `target` entries, found by binary search over the
// candidate thresholds.  Throws TargetTooSmall when target < #unigrams.
PruneToSizeResult prune_to_size(const BackoffModel &model, std::size_t target);

}  // namespace lmkit

#endif  // LMKIT_PRUNE_HH
