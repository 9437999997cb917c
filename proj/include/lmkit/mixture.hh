#ifndef LMKIT_MIXTURE_HH
#define LMKIT_MIXTURE_HH

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lmkit/model.hh"
#include "lmkit/weights.hh"

namespace lmkit {

typedef std::vector<std::shared_ptr<const BackoffModel>> ComponentList;

// Linear interpolation of backoff models evaluated on the fly:
// P(w|h) = sum_i weight_i * P_i(w|h), exact for every (h, w).
class MixtureModel final : public LanguageModel {
 public:
  // Components must share one vocabulary; weights must lie on the simplex.
  MixtureModel(ComponentList components, WeightVector weights);

  int order() const override { return order_; }
  const Vocabulary &vocab() const override { return components_.front()->vocab(); }
  double log10_prob(std::span<const WordId> history, WordId word) const override;
  double prob(std::span<const WordId> history, WordId word) const;

  const ComponentList &components() const { return components_; }
  const WeightVector &weights() const { return weights_; }

 private:
  ComponentList components_;
  WeightVector weights_;
  int order_ = 0;
};

// Throws VocabMismatch / BadWeights when the components and weights cannot
// form a mixture.
void check_mixture(const ComponentList &components, const WeightVector &weights);

// One backoff model over the union of the components' n-grams.  Each stored
// entry carries the exact mixture probability; backoff weights are
// recomputed so every history stays normalized.
BackoffModel interpolate_static(const ComponentList &components, const WeightVector &weights);

struct EmOptions {
  int max_iters = 200;
  double tol = 1e-9;  // stop when the log-likelihood gain drops below this
  bool count_end_symbol = true;
};

struct EmResult {
  WeightVector weights;
  // Held-out natural-log likelihood before the first and after each iteration.
  std::vector<double> log_likelihood;
  int iterations = 0;
};

// Expectation-maximization of mixture weights on held-out text.  An
// iteration that would lower the likelihood (floating-point noise at
// convergence) is discarded and ends the run.
EmResult fit_weights_em(const ComponentList &components, std::span<const IdSentence> heldout,
                        const std::optional<WeightVector> &init = std::nullopt, const EmOptions &options = {});

// Default labels "c0", "c1", ... for unnamed components.
std::vector<std::string> component_labels(std::size_t n);

}  // namespace lmkit

#endif  // LMKIT_MIXTURE_HH
