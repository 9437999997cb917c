#include "lmkit/mixture.hh"

#include <algorithm>
#include <cmath>

#include "lmkit/error.hh"

namespace lmkit {

namespace {

double safe_log10(double p) { return p > 0 ? std::log10(p) : kLogZero; }

double to_linear(double log10_p) { return log10_p <= kLogZero ? 0.0 : std::pow(10.0, log10_p); }

}  // namespace

std::vector<std::string> component_labels(std::size_t n) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("c" + std::to_string(i));
  return labels;
}

void check_mixture(const ComponentList &components, const WeightVector &weights) {
  if (components.empty()) throw Error(ErrorCode::kBadArgument, "a mixture needs at least one component");
  for (const auto &c : components) {
    if (!c) throw Error(ErrorCode::kBadArgument, "null mixture component");
    if (!(c->vocab() == components.front()->vocab())) {
      throw Error(ErrorCode::kVocabMismatch, "mixture components must share one vocabulary");
    }
  }
  weights.validate();
  if (weights.size() != components.size()) {
    throw Error(ErrorCode::kBadWeights, std::to_string(weights.size()) + " weights for " +
                                            std::to_string(components.size()) + " components");
  }
  if (!weights.on_simplex(1e-9)) throw Error(ErrorCode::kBadWeights, "mixture weights must be >= 0 and sum to 1");
}

MixtureModel::MixtureModel(ComponentList components, WeightVector weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  check_mixture(components_, weights_);
  for (const auto &c : components_) order_ = std::max(order_, c->order());
}

double MixtureModel::prob(std::span<const WordId> history, WordId word) const {
  double p = 0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (weights_.values[i] == 0) continue;
    p += weights_.values[i] * to_linear(components_[i]->log10_prob(history, word));
  }
  return p;
}

double MixtureModel::log10_prob(std::span<const WordId> history, WordId word) const {
  if (word >= vocab().size()) {
    throw Error(ErrorCode::kVocabMismatch, "word id " + std::to_string(word) + " outside vocabulary");
  }
  if (word == kBosId) return kLogZero;
  return safe_log10(prob(history, word));
}

BackoffModel interpolate_static(const ComponentList &components, const WeightVector &weights) {
  MixtureModel mix(components, weights);
  const int order = mix.order();
  const std::size_t vsize = mix.vocab().size();

  std::vector<BackoffModel::Level> levels(order);
  for (int n = 1; n <= order; ++n) {
    BackoffModel::Level &level = levels[n - 1];
    level.keys = NgramIndex(n);
    if (n == 1) {
      for (WordId w = 0; w < vsize; ++w) level.keys.push_back(std::span<const WordId>(&w, 1));
    } else {
      std::vector<WordId> ids;
      for (const auto &c : components) {
        if (c->order() < n) continue;
        const std::vector<WordId> &d = c->level(n).keys.data();
        ids.insert(ids.end(), d.begin(), d.end());
      }
      std::vector<std::size_t> perm = sort_order(ids, n);
      for (std::size_t p : perm) {
        std::span<const WordId> key(ids.data() + p * n, static_cast<std::size_t>(n));
        if (!level.keys.empty() && !key_less(level.keys.key(level.keys.size() - 1), key)) continue;
        level.keys.push_back(key);
      }
    }
    level.logprob.resize(level.keys.size());
    for (std::size_t i = 0; i < level.keys.size(); ++i) {
      std::span<const WordId> key = level.keys.key(i);
      WordId w = key.back();
      level.logprob[i] = w == kBosId ? kLogZero : safe_log10(mix.prob(key.first(n - 1), w));
    }
  }
  renormalize_backoffs(levels, vsize);
  return BackoffModel(components.front()->vocab_ptr(), std::move(levels));
}

EmResult fit_weights_em(const ComponentList &components, std::span<const IdSentence> heldout,
                        const std::optional<WeightVector> &init, const EmOptions &options) {
  const std::size_t k = components.size();
  WeightVector weights = init ? *init : WeightVector::uniform(component_labels(k));
  check_mixture(components, weights);

  int order = 0;
  for (const auto &c : components) order = std::max(order, c->order());

  // Per-token component probabilities, row-major [token][component].
  std::vector<double> probs;
  std::size_t tokens = 0;
  std::vector<WordId> history;
  for (const IdSentence &s : heldout) {
    history.assign(std::max(order - 1, 0), kBosId);
    std::size_t events = s.size() + (options.count_end_symbol ? 1 : 0);
    for (std::size_t t = 0; t < events; ++t) {
      WordId w = t < s.size() ? s[t] : kEosId;
      for (const auto &c : components) probs.push_back(to_linear(c->log10_prob(history, w)));
      history.push_back(w);
      ++tokens;
    }
  }
  if (tokens == 0) throw Error(ErrorCode::kEmptyHeldout, "held-out set has no tokens");

  auto log_likelihood = [&](const std::vector<double> &lambda) {
    double ll = 0;
    for (std::size_t t = 0; t < tokens; ++t) {
      double p = 0;
      for (std::size_t i = 0; i < k; ++i) p += lambda[i] * probs[t * k + i];
      if (!(p > 0)) throw Error(ErrorCode::kZeroProbability, "held-out token has zero mixture probability");
      ll += std::log(p);
    }
    return ll;
  };

  EmResult result;
  result.log_likelihood.push_back(log_likelihood(weights.values));
  if (k == 1) {
    result.weights = weights;
    return result;
  }
  std::vector<double> lambda = weights.values, next(k);
  for (int it = 0; it < options.max_iters; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t t = 0; t < tokens; ++t) {
      double p = 0;
      for (std::size_t i = 0; i < k; ++i) p += lambda[i] * probs[t * k + i];
      for (std::size_t i = 0; i < k; ++i) next[i] += lambda[i] * probs[t * k + i] / p;
    }
    for (std::size_t i = 0; i < k; ++i) next[i] /= static_cast<double>(tokens);
    double ll = log_likelihood(next);
    double prev = result.log_likelihood.back();
    if (ll < prev) break;
    lambda = next;
    result.log_likelihood.push_back(ll);
    ++result.iterations;
    if (ll - prev < options.tol) break;
  }
  result.weights = weights;
  result.weights.values = lambda;
  return result;
}

}  // namespace lmkit
