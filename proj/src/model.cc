#include "lmkit/model.hh"

#include <cmath>

#include "lmkit/error.hh"

namespace lmkit {

namespace {

double safe_log10(double p) { return p > 0 ? std::log10(p) : kLogZero; }

}  // namespace

BackoffModel::BackoffModel(std::shared_ptr<const Vocabulary> vocab, std::vector<Level> levels)
    : vocab_(std::move(vocab)), levels_(std::move(levels)) {
  if (!vocab_) throw Error(ErrorCode::kBadArgument, "model needs a vocabulary");
  if (levels_.empty()) throw Error(ErrorCode::kBadOrder, "model needs at least one order");
  const int n_max = order();
  for (int n = 1; n <= n_max; ++n) {
    const Level &l = levels_[n - 1];
    if (l.keys.length() != n) throw Error(ErrorCode::kBadArgument, "level " + std::to_string(n) + " has wrong key length");
    if (l.logprob.size() != l.keys.size()) throw Error(ErrorCode::kBadArgument, "level " + std::to_string(n) + " probability count mismatch");
    std::size_t want_backoff = n < n_max ? l.keys.size() : 0;
    if (l.backoff.size() != want_backoff) throw Error(ErrorCode::kBadArgument, "level " + std::to_string(n) + " backoff count mismatch");
    if (!l.keys.is_sorted_unique()) throw Error(ErrorCode::kBadArgument, "level " + std::to_string(n) + " is not sorted");
  }
  const Level &uni = levels_[0];
  if (uni.keys.size() != vocab_->size()) {
    throw Error(ErrorCode::kVocabMismatch, "unigram level must cover the whole vocabulary");
  }
  for (std::size_t i = 0; i < uni.keys.size(); ++i) {
    if (uni.keys.key(i)[0] != i) throw Error(ErrorCode::kVocabMismatch, "unigram level must cover the whole vocabulary");
  }
  for (int n = 2; n <= n_max; ++n) {
    const NgramIndex &keys = levels_[n - 1].keys;
    const NgramIndex &prev = levels_[n - 2].keys;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (i > 0 && std::equal(keys.key(i).begin(), keys.key(i).end() - 1, keys.key(i - 1).begin())) continue;
      if (!prev.find(keys.key(i).first(n - 1))) {
        throw Error(ErrorCode::kBadArgument, "history of a stored " + std::to_string(n) + "-gram is missing");
      }
    }
  }
}

std::optional<EntryValues> BackoffModel::find(std::span<const WordId> ngram) const {
  if (ngram.empty() || static_cast<int>(ngram.size()) > order()) return std::nullopt;
  const Level &l = levels_[ngram.size() - 1];
  std::optional<std::size_t> i;
  if (ngram.size() == 1) {
    if (ngram[0] < l.keys.size()) i = ngram[0];
  } else {
    i = l.keys.find(ngram);
  }
  if (!i) return std::nullopt;
  return EntryValues{l.logprob[*i], l.backoff.empty() ? 0.0 : l.backoff[*i]};
}

double BackoffModel::log10_prob(std::span<const WordId> history, WordId word) const {
  if (word >= vocab_->size()) {
    throw Error(ErrorCode::kVocabMismatch, "word id " + std::to_string(word) + " outside vocabulary");
  }
  return compose_backoff(last_ids(history, order() - 1), word,
                         [this](std::span<const WordId> k) { return find(k); });
}

std::size_t BackoffModel::total_size() const {
  std::size_t t = 0;
  for (const Level &l : levels_) t += l.keys.size();
  return t;
}

std::vector<std::size_t> BackoffModel::sizes() const {
  std::vector<std::size_t> s;
  for (const Level &l : levels_) s.push_back(l.keys.size());
  return s;
}

void renormalize_backoffs(std::vector<BackoffModel::Level> &levels, std::size_t vocab_size) {
  const int order = static_cast<int>(levels.size());
  auto lookup = [&](std::span<const WordId> k) -> std::optional<EntryValues> {
    const BackoffModel::Level &l = levels[k.size() - 1];
    std::optional<std::size_t> i = k.size() == 1 ? std::optional<std::size_t>(k[0]) : l.keys.find(k);
    if (!i || *i >= l.keys.size()) return std::nullopt;
    return EntryValues{l.logprob[*i], l.backoff.empty() ? 0.0 : l.backoff[*i]};
  };
  for (int n = 2; n <= order; ++n) {
    const BackoffModel::Level &level = levels[n - 1];
    BackoffModel::Level &below = levels[n - 2];
    below.backoff.assign(below.keys.size(), 0.0);
    const std::size_t count = level.keys.size();
    std::size_t i = 0;
    while (i < count) {
      std::span<const WordId> history = level.keys.key(i).first(n - 1);
      double seen = 0, seen_lower = 0;
      std::size_t children = 0;
      std::size_t end = i;
      while (end < count && std::equal(history.begin(), history.end(), level.keys.key(end).begin())) {
        std::span<const WordId> key = level.keys.key(end);
        if (key.back() != kBosId) {
          seen += std::pow(10.0, level.logprob[end]);
          seen_lower += std::pow(10.0, compose_backoff(key.subspan(1, n - 2), key.back(), lookup));
          ++children;
        }
        ++end;
      }
      auto h = n == 2 ? std::optional<std::size_t>(history[0]) : below.keys.find(history);
      double numerator = 1 - seen, denominator = 1 - seen_lower;
      if (children + 1 >= vocab_size || numerator <= 0 || denominator <= 0) {
        below.backoff[*h] = 0.0;
      } else {
        below.backoff[*h] = std::log10(numerator / denominator);
      }
      i = end;
    }
  }
}

Discounts auto_discounts(const CountTable &adjusted, int n) {
  std::vector<Count> coc = count_of_counts(adjusted, n, 4);
  double n1 = coc[1], n2 = coc[2], n3 = coc[3], n4 = coc[4];
  auto degenerate = [n](const std::string &why) {
    return Error(ErrorCode::kDegenerateDiscounts,
                 "order " + std::to_string(n) + ": " + why + "; supply explicit discounts");
  };
  if (n1 == 0 || n2 == 0 || n3 == 0) {
    throw degenerate("count-of-counts n1=" + std::to_string(coc[1]) + " n2=" + std::to_string(coc[2]) +
                     " n3=" + std::to_string(coc[3]) + " leave a discount undefined");
  }
  double y = n1 / (n1 + 2 * n2);
  Discounts d{1 - 2 * y * n2 / n1, 2 - 3 * y * n3 / n2, 3 - 4 * y * n4 / n3};
  if (d.d1 < 0 || d.d1 > 1 || d.d2 < 0 || d.d2 > 2 || d.d3plus < 0 || d.d3plus > 3) {
    throw degenerate("discount out of range");
  }
  return d;
}

std::vector<Discounts> resolve_discounts(const CountTable &adjusted, const DiscountConfig &config) {
  int order = adjusted.order();
  std::vector<Discounts> out;
  if (config.automatic) {
    for (int n = 1; n <= order; ++n) out.push_back(auto_discounts(adjusted, n));
    return out;
  }
  const auto &given = config.explicit_discounts;
  if (given.size() != 1 && given.size() != static_cast<std::size_t>(order)) {
    throw Error(ErrorCode::kBadArgument, "explicit discounts need 1 or " + std::to_string(order) + " entries");
  }
  for (int n = 1; n <= order; ++n) {
    const Discounts &d = given.size() == 1 ? given[0] : given[n - 1];
    if (!(d.d1 >= 0 && d.d1 <= 1 && d.d2 >= 0 && d.d2 <= 2 && d.d3plus >= 0 && d.d3plus <= 3)) {
      throw Error(ErrorCode::kBadArgument, "discount D_c must lie in [0, c]");
    }
    out.push_back(d);
  }
  return out;
}

BackoffModel estimate_kn(const CountTable &adjusted, std::shared_ptr<const Vocabulary> vocab,
                         const DiscountConfig &config) {
  const int order = adjusted.order();
  if (order > 1 && !adjusted.adjusted()) {
    throw Error(ErrorCode::kBadArgument, "estimate_kn expects continuation-adjusted counts");
  }
  if (adjusted.size(1) == 0) throw Error(ErrorCode::kEmptyCorpus, "no counts to estimate from");
  const std::size_t vsize = vocab->size();
  for (WordId w : adjusted.keys(1).data()) {
    if (w >= vsize) throw Error(ErrorCode::kVocabMismatch, "count table uses ids outside the vocabulary");
  }
  const std::vector<Discounts> discounts = resolve_discounts(adjusted, config);

  std::vector<BackoffModel::Level> levels(order);
  // Linear probabilities of the level below, parallel to its keys.
  std::vector<double> lower_prob;

  // Unigrams: every id, <s> pinned at the log-zero surrogate.
  {
    const Discounts &d = discounts[0];
    const std::vector<Count> &c = adjusted.counts(1);
    double total = 0, mass = 0;
    for (Count x : c) {
      total += static_cast<double>(x);
      mass += d.for_count(x);
    }
    double gamma = mass / total;
    double uniform = 1.0 / static_cast<double>(vsize - 1);
    std::vector<double> prob(vsize, 0.0);
    for (WordId w = 0; w < vsize; ++w) prob[w] = gamma * uniform;
    const NgramIndex &keys = adjusted.keys(1);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      Count x = c[i];
      prob[keys.key(i)[0]] = (static_cast<double>(x) - d.for_count(x)) / total + gamma * uniform;
    }
    prob[kBosId] = 0;
    BackoffModel::Level &level = levels[0];
    level.keys = NgramIndex(1);
    level.keys.reserve(vsize);
    level.logprob.resize(vsize);
    for (WordId w = 0; w < vsize; ++w) {
      level.keys.push_back(std::span<const WordId>(&w, 1));
      level.logprob[w] = safe_log10(prob[w]);
    }
    lower_prob = std::move(prob);
  }

  for (int n = 2; n <= order; ++n) {
    const Discounts &d = discounts[n - 1];
    const NgramIndex &keys = adjusted.keys(n);
    const std::vector<Count> &c = adjusted.counts(n);
    BackoffModel::Level &below = levels[n - 2];
    below.backoff.assign(below.keys.size(), 0.0);

    BackoffModel::Level &level = levels[n - 1];
    level.keys = NgramIndex(n);
    // All-<s> history feeding the next order; sorts first since <s> is id 0.
    const bool bos_history = n < order;
    std::size_t offset = bos_history ? 1 : 0;
    level.keys.reserve(keys.size() + offset);
    level.logprob.reserve(keys.size() + offset);
    std::vector<double> prob;
    prob.reserve(keys.size() + offset);
    if (bos_history) {
      std::vector<WordId> all_bos(n, kBosId);
      level.keys.push_back(all_bos);
      level.logprob.push_back(kLogZero);
      prob.push_back(0.0);
    }

    std::size_t i = 0;
    while (i < keys.size()) {
      std::span<const WordId> history = keys.key(i).first(n - 1);
      std::size_t end = i;
      double total = 0, mass = 0;
      std::size_t predictable = 0;
      while (end < keys.size() && std::equal(history.begin(), history.end(), keys.key(end).begin())) {
        total += static_cast<double>(c[end]);
        mass += d.for_count(c[end]);
        predictable += keys.key(end).back() != kBosId;
        ++end;
      }
      double gamma = mass / total;
      auto h_index = n == 2 ? std::optional<std::size_t>(history[0]) : below.keys.find(history);
      if (!h_index) throw Error(ErrorCode::kBadArgument, "count table is not prefix closed");
      // A history that already predicts every word never backs off.
      below.backoff[*h_index] = predictable + 1 >= vsize ? 0.0 : safe_log10(gamma);
      for (std::size_t j = i; j < end; ++j) {
        std::span<const WordId> suffix = keys.key(j).subspan(1);
        auto s_index = n == 2 ? std::optional<std::size_t>(suffix[0]) : below.keys.find(suffix);
        if (!s_index) throw Error(ErrorCode::kBadArgument, "count table is not suffix closed");
        double p = (static_cast<double>(c[j]) - d.for_count(c[j])) / total + gamma * lower_prob[*s_index];
        level.keys.push_back(keys.key(j));
        level.logprob.push_back(safe_log10(p));
        prob.push_back(p);
      }
      i = end;
    }
    lower_prob = std::move(prob);
  }
  return BackoffModel(std::move(vocab), std::move(levels));
}

}  // namespace lmkit
