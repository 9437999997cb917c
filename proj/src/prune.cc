#include "lmkit/prune.hh"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmkit/error.hh"

namespace lmkit {

namespace {

constexpr double kCostNoiseFloor = 1e-12;

}  // namespace

double history_probability(const BackoffModel &model, std::span<const WordId> history) {
  std::size_t start = 0;
  while (start < history.size() && history[start] == kBosId) ++start;
  double log10_p = 0;
  for (std::size_t i = start; i < history.size(); ++i) {
    log10_p += model.log10_prob(history.first(i), history[i]);
  }
  return std::pow(10.0, log10_p);
}

std::vector<std::vector<double>> entropy_scores(const BackoffModel &model) {
  const int order = model.order();
  std::vector<std::vector<double>> scores(order);
  for (int n = 2; n <= order; ++n) {
    const BackoffModel::Level &level = model.level(n);
    const std::size_t count = level.keys.size();
    scores[n - 1].assign(count, -std::numeric_limits<double>::infinity());
    std::vector<double> p(count), q(count);
    std::size_t i = 0;
    while (i < count) {
      std::span<const WordId> history = level.keys.key(i).first(n - 1);
      std::span<const WordId> lower = history.subspan(1);
      std::size_t end = i;
      double seen = 0, seen_lower = 0;
      while (end < count && std::equal(history.begin(), history.end(), level.keys.key(end).begin())) {
        WordId w = level.keys.key(end).back();
        if (w != kBosId) {
          p[end] = std::pow(10.0, level.logprob[end]);
          q[end] = std::pow(10.0, model.log10_prob(lower, w));
          seen += p[end];
          seen_lower += q[end];
        }
        ++end;
      }
      const double numerator = 1 - seen;
      const double denominator = 1 - seen_lower;
      const double bow = std::pow(10.0, model.find(history)->backoff);
      const double unseen = denominator > 0 ? bow * denominator : 0.0;
      const double p_history = history_probability(model, history);
      for (std::size_t j = i; j < end; ++j) {
        if (level.keys.key(j).back() == kBosId) continue;
        double new_bow = (numerator + p[j]) / (denominator + q[j]);
        double cost = p[j] * std::log(p[j] / (new_bow * q[j]));
        if (unseen > 0) cost += unseen * std::log(bow / new_bow);
        // KL divergence is nonnegative; anything this small is rounding noise.
        if (cost < kCostNoiseFloor) cost = 0;
        scores[n - 1][j] = p_history * cost;
      }
      i = end;
    }
  }
  return scores;
}

std::vector<std::vector<bool>> retained_entries(const BackoffModel &model,
                                                const std::vector<std::vector<double>> &scores, double threshold) {
  const int order = model.order();
  std::vector<std::vector<bool>> keep(order);
  keep[0].assign(model.size(1), true);
  for (int n = 2; n <= order; ++n) {
    keep[n - 1].resize(model.size(n));
    for (std::size_t i = 0; i < model.size(n); ++i) keep[n - 1][i] = scores[n - 1][i] > threshold;
  }
  // Highest order first so exemptions propagate down the prefix chain.
  for (int n = order; n >= 3; --n) {
    const NgramIndex &keys = model.level(n).keys;
    const NgramIndex &below = model.level(n - 1).keys;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (!keep[n - 1][i]) continue;
      if (i > 0 && keep[n - 1][i - 1] &&
          std::equal(keys.key(i).begin(), keys.key(i).end() - 1, keys.key(i - 1).begin())) {
        continue;
      }
      keep[n - 2][*below.find(keys.key(i).first(n - 1))] = true;
    }
  }
  return keep;
}

BackoffModel apply_retention(const BackoffModel &model, const std::vector<std::vector<bool>> &keep) {
  const int order = model.order();
  std::vector<BackoffModel::Level> levels(order);
  for (int n = 1; n <= order; ++n) {
    const BackoffModel::Level &src = model.level(n);
    BackoffModel::Level &dst = levels[n - 1];
    dst.keys = NgramIndex(n);
    for (std::size_t i = 0; i < src.keys.size(); ++i) {
      if (n > 1 && !keep[n - 1][i]) continue;
      dst.keys.push_back(src.keys.key(i));
      dst.logprob.push_back(src.logprob[i]);
    }
  }
  renormalize_backoffs(levels, model.vocab().size());
  return BackoffModel(model.vocab_ptr(), std::move(levels));
}

BackoffModel prune_entropy(const BackoffModel &model, double threshold) {
  if (!(threshold >= 0)) throw Error(ErrorCode::kBadArgument, "pruning threshold must be >= 0");
  return apply_retention(model, retained_entries(model, entropy_scores(model), threshold));
}

namespace {

std::size_t retained_size(const std::vector<std::vector<bool>> &keep) {
  std::size_t total = 0;
  for (const auto &level : keep) total += std::count(level.begin(), level.end(), true);
  return total;
}

}  // namespace

PruneToSizeResult prune_to_size(const BackoffModel &model, std::size_t target) {
  if (target < model.size(1)) {
    throw Error(ErrorCode::kTargetTooSmall, "target " + std::to_string(target) + " is below the " +
                                                std::to_string(model.size(1)) + " unigrams");
  }
  if (model.total_size() <= target) return {model, 0.0, 0};

  std::vector<std::vector<double>> scores = entropy_scores(model);
  std::vector<double> candidates = {0.0};
  for (const auto &level : scores) {
    for (double s : level) {
      if (s > 0 && std::isfinite(s)) candidates.push_back(s);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  // The largest candidate removes every scored entry, which always fits.
  std::size_t lo = 0, hi = candidates.size() - 1;
  int probes = 0;
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    ++probes;
    if (retained_size(retained_entries(model, scores, candidates[mid])) <= target) hi = mid; else lo = mid + 1;
  }
  double threshold = candidates[lo];
  return {apply_retention(model, retained_entries(model, scores, threshold)), threshold, probes};
}

}  // namespace lmkit
