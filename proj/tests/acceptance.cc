// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lmkit/arpa.hh"
#include "lmkit/eval.hh"
#include "lmkit/mixture.hh"
#include "lmkit/prune.hh"
#include "lmkit/serve.hh"
#include "lmkit/tune.hh"
#include "support.hh"

using namespace lmkit;

namespace {

// Tolerances and limits.
constexpr double kOracleTol = 1e-12;
constexpr double kNormTol = 1e-6;
constexpr double kPathTol = 1e-9;
constexpr double kEmWeightTol = 0.02;
constexpr double kEnvelopeScoreTol = 1e-9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char *name;
  double time_limit;  // seconds, 0 = none
  std::function<Outcome()> run;
};

std::string fmt(const char *format, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

std::vector<WordId> key_of(const BackoffModel &m, int n, std::size_t i) {
  auto k = m.level(n).keys.key(i);
  return {k.begin(), k.end()};
}

// 1
Outcome kn_oracle() {
  struct Fixture {
    uint64_t seed;
    std::size_t sentences, words, classes;
    int order;
  };
  const Fixture fixtures[] = {{101, 200, 500, 20, 3}, {102, 150, 400, 16, 4}, {103, 200, 600, 24, 2}};
  double worst = 0;
  std::size_t checked = 0;
  for (const auto &f : fixtures) {
    auto t = lmtest::train(lmtest::synthetic_corpus(f.seed, f.sentences, f.words, f.classes), f.order,
                           DiscountConfig::auto_estimate());
    lmtest::KnOracle oracle(t.ids, f.order, t.vocab->size());
    for (int n = 1; n <= f.order; ++n) {
      for (std::size_t i = 0; i < t.model->size(n); ++i) {
        auto key = key_of(*t.model, n, i);
        if (key.back() == kBosId) continue;
        worst = std::max(worst, std::abs(std::pow(10.0, t.model->level(n).logprob[i]) - oracle.prob(key)));
        ++checked;
      }
    }
  }
  return {worst <= kOracleTol, fmt("%.0f probabilities, max abs diff %.3g", checked, worst)};
}

// 2
Outcome normalization() {
  auto corpus_a = lmtest::synthetic_corpus(201, 200, 400, 16);
  auto corpus_b = lmtest::synthetic_corpus(202, 200, 400, 16);
  std::vector<Sentence> both = corpus_a;
  both.insert(both.end(), corpus_b.begin(), corpus_b.end());
  auto vocab = std::make_shared<const Vocabulary>(build_vocab(both, std::nullopt, 1));
  auto a = lmtest::train(corpus_a, 3, DiscountConfig::auto_estimate(), vocab);
  auto b = lmtest::train(corpus_b, 3, DiscountConfig::auto_estimate(), vocab);
  BackoffModel pruned = prune_entropy(*a.model, 1e-6);
  BackoffModel mixed = interpolate_static({a.model, b.model}, WeightVector{{"a", "b"}, {0.3, 0.7}});

  const BackoffModel *models[] = {a.model.get(), &pruned, &mixed};
  Rng rng(2);
  double worst = 0;
  std::size_t sampled = 0;
  for (int k = 0; k < 1000; ++k) {
    const BackoffModel &m = *models[k % 3];
    std::vector<WordId> h;
    if (rng.chance(0.5)) {
      auto stored = lmtest::stored_histories(m);
      h = stored[rng.below(stored.size())];
    } else {
      std::size_t len = rng.below(m.order());
      for (std::size_t i = 0; i < len; ++i) h.push_back(rng.below(m.vocab().size()));
    }
    worst = std::max(worst, std::abs(lmtest::probability_sum(m, h) - 1.0));
    ++sampled;
  }
  return {worst <= kNormTol, fmt("%.0f histories, max |sum - 1| %.3g", sampled, worst)};
}

std::string to_arpa(const BackoffModel &m) {
  std::ostringstream out;
  write_arpa(m, out);
  return out.str();
}

// 3
Outcome arpa_round_trip() {
  std::vector<std::string> files;
  for (int order : {1, 2, 3, 4}) {
    DiscountConfig d = order == 1 ? DiscountConfig::fixed(0.5) : DiscountConfig::auto_estimate();
    files.push_back(to_arpa(*lmtest::train(lmtest::synthetic_corpus(300 + order, 150), order, d).model));
  }
  auto t = lmtest::train(lmtest::synthetic_corpus(305, 200), 3, DiscountConfig::auto_estimate());
  files.push_back(to_arpa(prune_entropy(*t.model, 1e-6)));
  int identical = 0;
  for (const auto &text : files) {
    std::istringstream in(text);
    if (to_arpa(read_arpa(in)) == text) ++identical;
  }
  return {identical == 5, fmt("%.0f of 5 files identical after read and write", identical)};
}

// Shared by 4 and 5: order-3 model on about a million tokens.
struct PruneSweep {
  std::vector<double> thresholds{0, 1e-8, 1e-7, 1e-6, 1e-5};
  std::vector<std::size_t> sizes;
  std::vector<double> ppl;
  std::vector<std::vector<std::vector<bool>>> keep;
  std::size_t train_tokens = 0;
};

const PruneSweep &prune_sweep() {
  static const PruneSweep sweep = [] {
    PruneSweep s;
    TextSource source(LexiconConfig{}, 11);
    std::vector<Sentence> train;
    std::size_t seed = 1000;
    while (s.train_tokens < 1000000) {
      for (auto &sent : source.corpus(1000, seed++)) {
        s.train_tokens += sent.size();
        train.push_back(std::move(sent));
      }
    }
    auto t = lmtest::train(train, 3, DiscountConfig::auto_estimate());
    auto held = map_corpus(*t.vocab, source.corpus(2000, 1));
    auto scores = entropy_scores(*t.model);
    for (double th : s.thresholds) {
      s.keep.push_back(retained_entries(*t.model, scores, th));
      BackoffModel p = apply_retention(*t.model, s.keep.back());
      s.sizes.push_back(p.total_size());
      s.ppl.push_back(perplexity(p, held).ppl);
    }
    return s;
  }();
  return sweep;
}

// 4
Outcome prune_trend() {
  const PruneSweep &s = prune_sweep();
  bool ok = true;
  std::string detail = fmt("%.0f training tokens;", s.train_tokens);
  for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
    detail += fmt(" [%g: %.0f entries, ppl %.4f]", s.thresholds[i], s.sizes[i], s.ppl[i]);
    if (i > 0) ok = ok && s.sizes[i] < s.sizes[i - 1] && s.ppl[i] >= s.ppl[i - 1];
  }
  return {ok, detail};
}

// 5
Outcome prune_nesting() {
  const PruneSweep &s = prune_sweep();
  std::size_t violations = 0, compared = 0;
  for (std::size_t k = 1; k < s.keep.size(); ++k) {
    for (std::size_t n = 0; n < s.keep[k].size(); ++n) {
      for (std::size_t i = 0; i < s.keep[k][n].size(); ++i) {
        ++compared;
        if (s.keep[k][n][i] && !s.keep[k - 1][n][i]) ++violations;
      }
    }
  }
  return {violations == 0, fmt("%.0f entry checks, %.0f violations", compared, violations)};
}

// 6
Outcome rescoring_parity() {
  const std::vector<std::string> words{"a", "b", "c", "d", "e"};
  int matched = 0;
  for (int draw = 0; draw < 20; ++draw) {
    Rng rng(600 + draw);
    // Model B: random corpus over the five words with a skewed distribution.
    std::vector<double> weights;
    for (std::size_t i = 0; i < words.size(); ++i) weights.push_back(0.2 + rng.unit());
    auto cum = cumulative(weights);
    std::vector<Sentence> corpus;
    for (int s = 0; s < 40; ++s) {
      Sentence sent(1 + rng.below(6));
      for (auto &w : sent) w = words[rng.pick(cum)];
      corpus.push_back(sent);
    }
    int order = 2 + static_cast<int>(rng.below(2));
    auto t = lmtest::train(corpus, order, DiscountConfig::fixed(rng.uniform(0.3, 0.9)));

    // Prefix tree of every sequence of length 1..4; node 0 is the empty prefix.
    std::vector<EdgeSpec> edges;
    std::vector<NodeId> finals;
    std::vector<std::pair<Sentence, double>> all;  // sequence, acoustic total
    std::vector<std::pair<Sentence, double>> frontier{{{}, 0.0}};
    std::vector<NodeId> frontier_nodes{0};
    NodeId next = 1;
    for (int len = 1; len <= 4; ++len) {
      std::vector<std::pair<Sentence, double>> grown;
      std::vector<NodeId> grown_nodes;
      for (std::size_t f = 0; f < frontier.size(); ++f) {
        for (const auto &w : words) {
          double ac = -rng.uniform(0.0, 3.0);
          edges.push_back(EdgeSpec{frontier_nodes[f], next, w, {ac, 0.0}});
          Sentence seq = frontier[f].first;
          seq.push_back(w);
          grown.push_back({seq, frontier[f].second + ac});
          all.push_back(grown.back());
          finals.push_back(next);
          grown_nodes.push_back(next++);
        }
      }
      frontier = std::move(grown);
      frontier_nodes = std::move(grown_nodes);
    }
    Lattice lat({"ac", "lm"}, next, edges, finals);
    WeightVector w{{"ac", "lm"}, {1.0, rng.uniform(0.5, 2.0)}};
    Hypothesis got = best_path(rescore(lat, *t.model, "lm", order), w);

    const Sentence *best = nullptr;
    double best_score = -INFINITY;
    for (const auto &[seq, ac] : all) {
      double score = ac + w.values[1] * lmtest::sentence_log10(*t.model, seq);
      if (score > best_score || (score == best_score && seq < *best)) {
        best_score = score;
        best = &seq;
      }
    }
    if (got.words == *best) ++matched;
  }
  return {matched == 20, fmt("%.0f of 20 draws match the brute-force argmax over 780 sequences", matched)};
}

// 7
Outcome rescoring_exactness() {
  auto t = lmtest::train(lmtest::synthetic_corpus(700, 300), 3, DiscountConfig::auto_estimate());
  std::vector<std::string> lexicon(t.vocab->words().begin() + 3, t.vocab->words().end());
  std::vector<Lattice> lattices{read_lattice_file(lmtest::data_path("five_node.lat"))};
  Rng rng(7);
  for (const auto &ref : lmtest::synthetic_corpus(701, 4)) lattices.push_back(noisy_lattice(ref, lexicon, LatticeNoise{}, rng));
  double worst = 0;
  std::size_t paths = 0;
  for (const Lattice &lat : lattices) {
    for (int order : {2, 3}) {
      const BackoffModel *m = t.model.get();
      std::shared_ptr<const BackoffModel> bigram;
      if (order == 2) {
        bigram = lmtest::train(lmtest::synthetic_corpus(700, 300), 2, DiscountConfig::auto_estimate(), t.vocab).model;
        m = bigram.get();
      }
      Lattice r = rescore(lat, *m, "lm", order);
      std::size_t lm = *r.label_index("lm");
      for (int k = 0; k < 100; ++k) {
        lmtest::Path p = lmtest::random_path(r, rng);
        worst = std::max(worst, std::abs(p.features[lm] - lmtest::sentence_log10(*m, p.words)));
        ++paths;
      }
    }
  }
  return {worst <= kPathTol, fmt("%.0f paths over %.0f lattices, max diff %.3g", paths, lattices.size(), worst)};
}

// 8
Outcome em_fitting() {
  int good = 0;
  double worst_gap = 0;
  bool monotone = true;
  for (int f = 0; f < 10; ++f) {
    LexiconConfig lex{800 + static_cast<uint64_t>(f), 300, 12};
    TextSource src_a(lex, 1), src_b(lex, 2);
    auto corpus_a = src_a.corpus(200, 10 + f), corpus_b = src_b.corpus(200, 20 + f);
    std::vector<Sentence> both = corpus_a;
    both.insert(both.end(), corpus_b.begin(), corpus_b.end());
    auto vocab = std::make_shared<const Vocabulary>(build_vocab(both, std::nullopt, 1));
    auto a = lmtest::train(corpus_a, 2, DiscountConfig::auto_estimate(), vocab);
    auto b = lmtest::train(corpus_b, 2, DiscountConfig::auto_estimate(), vocab);
    Rng rng(850 + f);
    double share = rng.uniform(0.1, 0.9);
    std::vector<Sentence> held;
    auto held_a = src_a.corpus(100, 30 + f), held_b = src_b.corpus(100, 40 + f);
    for (std::size_t i = 0; i < 100; ++i) held.push_back(rng.chance(share) ? held_a[i] : held_b[i]);
    auto held_ids = map_corpus(*vocab, held);

    EmResult em = fit_weights_em({a.model, b.model}, held_ids);
    for (std::size_t i = 1; i < em.log_likelihood.size(); ++i) {
      monotone = monotone && em.log_likelihood[i] >= em.log_likelihood[i - 1];
    }

    std::vector<std::pair<double, double>> probs;
    for (const IdSentence &s : held_ids) {
      std::vector<WordId> h{kBosId};
      for (std::size_t i = 0; i <= s.size(); ++i) {
        WordId w = i < s.size() ? s[i] : kEosId;
        probs.push_back({std::pow(10.0, a.model->log10_prob(h, w)), std::pow(10.0, b.model->log10_prob(h, w))});
        h.push_back(w);
      }
    }
    double best_lambda = 0, best_ll = -INFINITY;
    for (int g = 0; g <= 100; ++g) {
      double lambda = g / 100.0, ll = 0;
      for (auto [pa, pb] : probs) ll += std::log(lambda * pa + (1 - lambda) * pb);
      if (ll > best_ll) {
        best_ll = ll;
        best_lambda = lambda;
      }
    }
    double gap = std::abs(em.weights.values[0] - best_lambda);
    worst_gap = std::max(worst_gap, gap);
    if (gap <= kEmWeightTol) ++good;
  }
  return {monotone && good == 10,
          fmt("%.0f of 10 fixtures within grid tolerance, max gap %.4f, likelihood monotone %.0f", good, worst_gap,
              monotone)};
}

// Synthetic tune set: two domains sharing a lexicon, one LM per domain,
// references drawn from both, lattices with acoustic and insertion scores.
TuneSet synthetic_tune_set() {
  LexiconConfig lex{9, 1500, 30};
  TextSource dom_a(lex, 91), dom_b(lex, 92);
  auto train_a = dom_a.corpus(3000, 1), train_b = dom_b.corpus(3000, 2);
  std::vector<Sentence> both = train_a;
  both.insert(both.end(), train_b.begin(), train_b.end());
  auto vocab = std::make_shared<const Vocabulary>(build_vocab(both, std::nullopt, 1));
  auto lm_a = lmtest::train(train_a, 3, DiscountConfig::auto_estimate(), vocab).model;
  auto lm_b = lmtest::train(train_b, 3, DiscountConfig::auto_estimate(), vocab).model;

  Rng rng(93);
  std::vector<TuneItem> items;
  auto refs_a = dom_a.corpus(40, 3), refs_b = dom_b.corpus(40, 4);
  for (std::size_t i = 0; i < 40; ++i) {
    for (const Sentence *ref : {&refs_a[i], &refs_b[i]}) {
      Lattice lat = noisy_lattice(*ref, dom_a.words(), LatticeNoise{}, rng);
      lat = rescore(rescore(lat, *lm_a, "lm_a", 3), *lm_b, "lm_b", 3);
      items.push_back({std::move(lat), *ref});
    }
  }
  return make_tune_set(std::move(items));
}

// 9
Outcome mert_ablation() {
  TuneSet ts = synthetic_tune_set();
  WeightVector uniform = WeightVector::uniform(ts.labels);
  WeightVector dropped = uniform;
  for (std::size_t i = 0; i < dropped.size(); ++i) {
    dropped.values[i] = dropped.labels[i] == "lm_b" ? 0.0 : 1.0 / (dropped.size() - 1);
  }
  double wer_uniform = tune_set_wer(ts, uniform);
  double wer_dropped = tune_set_wer(ts, dropped);
  MertResult r = mert(ts, uniform);
  bool trace_ok = true;
  for (std::size_t i = 1; i < r.wer_trace.size(); ++i) trace_ok = trace_ok && r.wer_trace[i] <= r.wer_trace[i - 1];
  bool ok = trace_ok && r.final_wer <= wer_uniform && wer_uniform <= wer_dropped &&
            tune_set_wer(ts, r.weights) == r.final_wer;
  return {ok, fmt("WER mert %.4f, uniform %.4f, dropped %.4f", r.final_wer, wer_uniform, wer_dropped) +
                  fmt(", %.0f rounds, trace non-increasing %.0f", r.rounds, trace_ok)};
}

// 10
Outcome envelope_correctness() {
  Rng rng(1010);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Line> lines(1 + rng.below(30));
    for (auto &l : lines) {
      // Some duplicated slopes so parallel lines are exercised.
      double slope = rng.chance(0.2) ? std::round(rng.uniform(-3, 3)) : rng.uniform(-3, 3);
      l = Line{rng.uniform(-10, 10), slope, rng.below(5)};
    }
    Envelope e = envelope_sweep(lines);
    for (int k = 0; k < 10000; ++k) {
      double g = rng.uniform(-50, 50);
      double best = -INFINITY;
      for (const Line &l : lines) best = std::max(best, l.offset + l.slope * g);
      auto it = std::find_if(e.intervals.begin(), e.intervals.end(),
                             [g](const EnvelopeInterval &iv) { return g >= iv.lo && g < iv.hi; });
      if (it == e.intervals.end()) {
        ++mismatches;
        continue;
      }
      const Line &chosen = lines[it->line];
      double score = chosen.offset + chosen.slope * g;
      if (score < best - kEnvelopeScoreTol * (1 + std::abs(best)) || it->errors != chosen.errors) ++mismatches;
    }
  }
  return {mismatches == 0, fmt("200 trials x 10000 points, %.0f mismatches", mismatches)};
}

bool bit_equal(const std::vector<double> &a, const std::vector<double> &b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// 11
Outcome distributed_parity() {
  auto t = lmtest::train(lmtest::synthetic_corpus(1100, 300), 3, DiscountConfig::auto_estimate());
  const BackoffModel &m = *t.model;
  Rng rng(1101);
  std::vector<LmQuery> queries;
  for (int i = 0; i < 500; ++i) {
    LmQuery q;
    std::size_t len = rng.below(4);
    for (std::size_t k = 0; k < len; ++k) q.history.push_back(rng.below(m.vocab().size()));
    q.word = 1 + rng.below(m.vocab().size() - 1);
    queries.push_back(q);
  }
  std::vector<double> expect;
  for (const auto &q : queries) expect.push_back(m.log10_prob(q.history, q.word));
  std::vector<std::string> lexicon(t.vocab->words().begin() + 3, t.vocab->words().end());
  std::vector<Lattice> lattices{read_lattice_file(lmtest::data_path("five_node.lat"))};
  for (const auto &ref : lmtest::synthetic_corpus(1102, 5)) lattices.push_back(noisy_lattice(ref, lexicon, LatticeNoise{}, rng));

  int lookups_ok = 0, rescores_ok = 0, rescores = 0, round_violations = 0;
  for (std::size_t s : {1, 2, 5, 8}) {
    ShardedClient client = connect_in_process(t.vocab, shard_model(m, s));
    auto rounds = [&] {
      std::vector<std::size_t> r;
      for (std::size_t i = 0; i < s; ++i) r.push_back(client.transport(i).rounds());
      return r;
    };
    auto before = rounds();
    if (bit_equal(client.batch_lookup(queries), expect)) ++lookups_ok;
    auto after = rounds();
    for (std::size_t i = 0; i < s; ++i) round_violations += after[i] - before[i] != 1;

    for (const Lattice &lat : lattices) {
      ++rescores;
      std::size_t batches = 0;
      before = rounds();
      Lattice remote = rescore_batched(lat, client.vocab(), 3, "lm", [&](const std::vector<LmQuery> &qs) {
        ++batches;
        auto b0 = rounds();
        auto out = client.batch_lookup(qs);
        auto b1 = rounds();
        for (std::size_t i = 0; i < s; ++i) round_violations += b1[i] - b0[i] > 1;
        return out;
      });
      after = rounds();
      for (std::size_t i = 0; i < s; ++i) round_violations += after[i] - before[i] > batches;
      if (remote == rescore(lat, m, "lm", 3) && rescore_remote(lat, client, "lm", 3) == remote) ++rescores_ok;
    }
  }
  return {lookups_ok == 4 && rescores_ok == rescores && round_violations == 0,
          fmt("lookup parity %.0f/4, rescore parity %.0f/%.0f", lookups_ok, rescores_ok, rescores) +
              fmt(", round-count violations %.0f", round_violations)};
}

// 12
Outcome wer_oracle() {
  Rng rng(1200);
  const std::vector<std::string> alphabet{"x", "y", "z"};
  int exact = 0;
  for (int k = 0; k < 500; ++k) {
    std::vector<std::string> hyp(rng.below(9)), ref(1 + rng.below(8));
    for (auto &w : hyp) w = alphabet[rng.below(3)];
    for (auto &w : ref) w = alphabet[rng.below(3)];
    WerReport r = word_error_rate(hyp, ref);
    lmtest::Edits e = lmtest::brute_edits(hyp, ref);
    if (r.substitutions == e.sub && r.deletions == e.del && r.insertions == e.ins && r.ref_length == ref.size() &&
        r.wer == static_cast<double>(e.sub + e.del + e.ins) / ref.size()) {
      ++exact;
    }
  }
  return {exact == 500, fmt("%.0f of 500 pairs exact", exact)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "KN oracle equivalence", 5, kn_oracle},
      {2, "normalization", 10, normalization},
      {3, "ARPA round trip", 0, arpa_round_trip},
      {4, "pruning trend", 120, prune_trend},
      {5, "pruning nesting", 0, prune_nesting},
      {6, "rescoring parity", 60, rescoring_parity},
      {7, "rescoring exactness", 0, rescoring_exactness},
      {8, "EM weight fitting", 30, em_fitting},
      {9, "MERT ablation ordering", 60, mert_ablation},
      {10, "envelope correctness", 0, envelope_correctness},
      {11, "distributed parity", 60, distributed_parity},
      {12, "WER oracle", 0, wer_oracle},
  };
  int failed = 0;
  for (const Criterion &c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool in_time = c.time_limit == 0 || secs < c.time_limit;
    bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %s: %s (%.2fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_time ? "" : fmt(", limit %.0fs exceeded", c.time_limit).c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
