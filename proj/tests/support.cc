#include "support.hh"

#include <cmath>
#include <functional>

#include "lmkit/vocab.hh"

#ifndef LMKIT_TEST_DATA_DIR
#define LMKIT_TEST_DATA_DIR "data"
#endif

namespace lmtest {

std::vector<Sentence> corpus_of(std::initializer_list<const char *> lines) {
  std::vector<Sentence> out;
  for (const char *line : lines) out.push_back(split_words(line));
  return out;
}

std::vector<Sentence> synthetic_corpus(uint64_t seed, std::size_t sentences, std::size_t words, std::size_t classes) {
  LexiconConfig lex;
  lex.seed = seed;
  lex.words = words;
  lex.classes = classes;
  return TextSource(lex, seed + 1000).corpus(sentences, seed + 2000);
}

Trained train(const std::vector<Sentence> &corpus, int order, const DiscountConfig &discounts,
              std::shared_ptr<const Vocabulary> vocab) {
  Trained t;
  t.vocab = vocab ? vocab : std::make_shared<const Vocabulary>(build_vocab(corpus, std::nullopt, 1));
  t.ids = map_corpus(*t.vocab, corpus);
  CountTable raw = count_ngrams(t.ids, order);
  CountTable adjusted = order > 1 ? adjust_counts_kn(raw) : raw;
  t.model = std::make_shared<const BackoffModel>(estimate_kn(adjusted, t.vocab, discounts));
  return t;
}

KnOracle::KnOracle(const std::vector<IdSentence> &corpus, int order, std::size_t vocab_size,
                   std::optional<Discounts> fixed)
    : order_(order), vocab_size_(vocab_size), history_stats_(order) {
  for (const IdSentence &s : corpus) {
    std::vector<WordId> padded(order - 1, kBosId);
    padded.insert(padded.end(), s.begin(), s.end());
    padded.push_back(kEosId);
    for (std::size_t j = order - 1; j < padded.size(); ++j) {
      for (int k = 1; k <= order; ++k) {
        raw_[std::vector<WordId>(padded.begin() + (j + 1 - k), padded.begin() + (j + 1))] += 1;
      }
    }
  }
  for (const auto &[g, c] : raw_) {
    if (g.size() >= 2) continuation_[std::vector<WordId>(g.begin() + 1, g.end())] += 1;
  }
  for (int k = 1; k <= order; ++k) {
    if (fixed) {
      discounts_.push_back(*fixed);
      continue;
    }
    double n[5] = {0, 0, 0, 0, 0};
    for (const auto &[g, c] : raw_) {
      if (static_cast<int>(g.size()) != k) continue;
      double x = count(g);
      if (x >= 1 && x <= 4) n[static_cast<int>(x)] += 1;
    }
    double y = n[1] / (n[1] + 2 * n[2]);
    discounts_.push_back(Discounts{1 - 2 * y * n[2] / n[1], 2 - 3 * y * n[3] / n[2], 3 - 4 * y * n[4] / n[3]});
  }
  for (const auto &[g, c] : raw_) {
    int k = static_cast<int>(g.size());
    double x = count(g);
    auto &stats = history_stats_[k - 1][std::vector<WordId>(g.begin(), g.end() - 1)];
    stats.first += x;
    stats.second += discounts_[k - 1].for_count(static_cast<Count>(x));
  }
}

double KnOracle::count(const std::vector<WordId> &g) const {
  if (static_cast<int>(g.size()) == order_ || g.front() == kBosId) {
    auto it = raw_.find(g);
    return it == raw_.end() ? 0 : it->second;
  }
  auto it = continuation_.find(g);
  return it == continuation_.end() ? 0 : it->second;
}

double KnOracle::prob_at(std::vector<WordId> ctx, WordId w) const {
  const int k = static_cast<int>(ctx.size()) + 1;
  auto it = history_stats_[k - 1].find(ctx);
  std::vector<WordId> g = ctx;
  g.push_back(w);
  double c = count(g);
  if (ctx.empty()) {
    const auto &[total, mass] = it->second;
    return (c - discounts_[0].for_count(static_cast<Count>(c))) / total +
           mass / total / static_cast<double>(vocab_size_ - 1);
  }
  std::vector<WordId> shorter(ctx.begin() + 1, ctx.end());
  if (it == history_stats_[k - 1].end()) return prob_at(shorter, w);
  const auto &[total, mass] = it->second;
  return (c - discounts_[k - 1].for_count(static_cast<Count>(c))) / total + mass / total * prob_at(shorter, w);
}

double KnOracle::prob(const std::vector<WordId> &ngram) const {
  return prob_at(std::vector<WordId>(ngram.begin(), ngram.end() - 1), ngram.back());
}

double probability_sum(const LanguageModel &model, const std::vector<WordId> &history) {
  double sum = 0;
  for (WordId w = 0; w < model.vocab().size(); ++w) sum += std::pow(10.0, model.log10_prob(history, w));
  return sum;
}

std::vector<std::vector<WordId>> stored_histories(const BackoffModel &model) {
  std::vector<std::vector<WordId>> out{{}};
  for (int n = 1; n < model.order(); ++n) {
    const NgramIndex &keys = model.level(n).keys;
    for (std::size_t i = 0; i < keys.size(); ++i) out.emplace_back(keys.key(i).begin(), keys.key(i).end());
  }
  return out;
}

double brute_prune_cost(const BackoffModel &model, const std::vector<WordId> &ngram) {
  const std::size_t V = model.vocab().size();
  std::vector<WordId> h(ngram.begin(), ngram.end() - 1);
  std::vector<WordId> lower(h.begin() + 1, h.end());
  const WordId w = ngram.back();

  std::vector<bool> kept(V, false);
  const NgramIndex &keys = model.level(static_cast<int>(ngram.size())).keys;
  auto [b, e] = keys.prefix_range(h);
  for (std::size_t i = b; i < e; ++i) kept[keys.key(i).back()] = true;
  kept[w] = false;

  std::vector<double> p(V), q(V);
  double num = 0, den = 0;
  for (WordId v = 1; v < V; ++v) {
    p[v] = std::pow(10.0, model.log10_prob(h, v));
    q[v] = std::pow(10.0, model.log10_prob(lower, v));
    if (!kept[v]) {
      num += p[v];
      den += q[v];
    }
  }
  double bow = num / den;
  double kl = 0;
  for (WordId v = 1; v < V; ++v) {
    double pruned = kept[v] ? p[v] : bow * q[v];
    if (p[v] > 0) kl += p[v] * std::log(p[v] / pruned);
  }
  double ph = 1;
  std::size_t start = 0;
  while (start < h.size() && h[start] == kBosId) ++start;
  for (std::size_t i = start; i < h.size(); ++i) {
    ph *= std::pow(10.0, model.log10_prob(std::span<const WordId>(h.data(), i), h[i]));
  }
  return ph * kl;
}

Edits brute_edits(const std::vector<std::string> &hyp, const std::vector<std::string> &ref) {
  const std::size_t m = hyp.size(), n = ref.size();
  std::size_t best_cost = SIZE_MAX, best_pairs = 0, best_mism = 0;
  std::function<void(std::size_t, std::size_t, std::size_t, std::size_t)> rec =
      [&](std::size_t i, std::size_t j, std::size_t pairs, std::size_t mism) {
        std::size_t cost = mism + (m - pairs) + (n - pairs);
        if (cost < best_cost || (cost == best_cost && pairs > best_pairs)) {
          best_cost = cost;
          best_pairs = pairs;
          best_mism = mism;
        }
        for (std::size_t i2 = i; i2 < m; ++i2) {
          for (std::size_t j2 = j; j2 < n; ++j2) rec(i2 + 1, j2 + 1, pairs + 1, mism + (hyp[i2] != ref[j2]));
        }
      };
  rec(0, 0, 0, 0);
  return Edits{best_mism, n - best_pairs, m - best_pairs};
}

std::vector<Path> enumerate_paths(const Lattice &lattice) {
  std::vector<Path> out;
  Path current;
  current.features.assign(lattice.labels().size(), 0.0);
  std::function<void(NodeId)> dfs = [&](NodeId v) {
    if (lattice.is_final(v)) out.push_back(current);
    auto [b, e] = lattice.out_edges(v);
    for (std::size_t k = b; k < e; ++k) {
      const Lattice::Edge &edge = lattice.edges()[k];
      Path saved = current;
      current.words.push_back(lattice.word(edge));
      current.edges.push_back(k);
      for (std::size_t i = 0; i < edge.scores.size(); ++i) current.features[i] += edge.scores[i];
      dfs(edge.to);
      current = std::move(saved);
    }
  };
  if (!lattice.empty()) dfs(lattice.start());
  return out;
}

Path random_path(const Lattice &lattice, Rng &rng) {
  Path path;
  path.features.assign(lattice.labels().size(), 0.0);
  NodeId v = lattice.start();
  while (true) {
    auto [b, e] = lattice.out_edges(v);
    std::size_t options = (e - b) + (lattice.is_final(v) ? 1 : 0);
    std::size_t choice = rng.below(options);
    if (choice == e - b) return path;
    const Lattice::Edge &edge = lattice.edges()[b + choice];
    path.words.push_back(lattice.word(edge));
    path.edges.push_back(b + choice);
    for (std::size_t i = 0; i < edge.scores.size(); ++i) path.features[i] += edge.scores[i];
    v = edge.to;
  }
}

double sentence_log10(const LanguageModel &lm, const std::vector<std::string> &words) {
  std::vector<WordId> history(std::max(lm.order() - 1, 0), kBosId);
  double total = 0;
  for (const std::string &w : words) {
    WordId id = lm.vocab().id(w);
    total += lm.log10_prob(history, id);
    history.push_back(id);
  }
  return total + lm.log10_prob(history, kEosId);
}

std::string data_path(const std::string &name) { return std::string(LMKIT_TEST_DATA_DIR) + "/" + name; }

}  // namespace lmtest
