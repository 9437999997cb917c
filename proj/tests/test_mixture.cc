#include <cmath>

#include "doctest.h"
#include "lmkit/error.hh"
#include "lmkit/eval.hh"
#include "lmkit/mixture.hh"
#include "support.hh"

using namespace lmkit;

namespace {

struct Pair {
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const BackoffModel> a, b;
  std::vector<IdSentence> heldout;
};

Pair two_models(uint64_t seed, int order) {
  LexiconConfig lex{seed, 60, 8};
  TextSource sa(lex, seed + 1), sb(lex, seed + 2);
  auto ca = sa.corpus(150, seed + 3), cb = sb.corpus(150, seed + 4);
  std::vector<Sentence> all = ca;
  all.insert(all.end(), cb.begin(), cb.end());
  Pair p;
  p.vocab = std::make_shared<const Vocabulary>(build_vocab(all, std::nullopt, 1));
  p.a = lmtest::train(ca, order, DiscountConfig::fixed(0.7), p.vocab).model;
  p.b = lmtest::train(cb, order, DiscountConfig::fixed(0.7), p.vocab).model;
  auto held = sa.corpus(30, seed + 5);
  auto held_b = sb.corpus(30, seed + 6);
  held.insert(held.end(), held_b.begin(), held_b.end());
  p.heldout = map_corpus(*p.vocab, held);
  return p;
}

double p10(double lp) { return std::pow(10.0, lp); }

void check_static_matches_mixture(const ComponentList &comps, const WeightVector &w) {
  BackoffModel s = interpolate_static(comps, w);
  for (int n = 1; n <= s.order(); ++n) {
    const BackoffModel::Level &level = s.level(n);
    for (std::size_t i = 0; i < level.keys.size(); ++i) {
      auto key = level.keys.key(i);
      if (key.back() == kBosId) continue;
      auto h = key.first(key.size() - 1);
      double expected = 0;
      for (std::size_t c = 0; c < comps.size(); ++c) expected += w.values[c] * p10(comps[c]->log10_prob(h, key.back()));
      CHECK(p10(level.logprob[i]) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
  for (const auto &h : lmtest::stored_histories(s)) {
    CHECK(lmtest::probability_sum(s, h) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

}  // namespace

TEST_CASE("static interpolation with a one-hot weight reproduces the component") {
  Pair p = two_models(41, 3);
  ComponentList comps{p.a, p.b};
  check_static_matches_mixture(comps, WeightVector{{"a", "b"}, {1.0, 0.0}});
}

TEST_CASE("static interpolation of identical components changes nothing") {
  Pair p = two_models(42, 2);
  ComponentList comps{p.a, p.a};
  BackoffModel s = interpolate_static(comps, WeightVector{{"x", "y"}, {0.25, 0.75}});
  for (std::size_t i = 0; i < s.size(2); ++i) {
    auto key = s.level(2).keys.key(i);
    if (key.back() == kBosId) continue;
    CHECK(p10(s.level(2).logprob[i]) == doctest::Approx(p10(p.a->log10_prob(key.first(1), key[1]))).epsilon(1e-10));
  }
}

TEST_CASE("static interpolation at stored entries equals the weighted mixture") {
  Pair p = two_models(43, 3);
  check_static_matches_mixture({p.a, p.b}, WeightVector{{"a", "b"}, {0.3, 0.7}});
}

TEST_CASE("on-the-fly mixture is exact for every query") {
  Pair p = two_models(44, 3);
  MixtureModel mix({p.a, p.b}, WeightVector{{"a", "b"}, {0.3, 0.7}});
  Rng rng(5);
  for (int q = 0; q < 300; ++q) {
    std::vector<WordId> h{static_cast<WordId>(rng.below(p.vocab->size())), static_cast<WordId>(1 + rng.below(p.vocab->size() - 1))};
    WordId w = static_cast<WordId>(1 + rng.below(p.vocab->size() - 1));
    double expected = 0.3 * p10(p.a->log10_prob(h, w)) + 0.7 * p10(p.b->log10_prob(h, w));
    CHECK(mix.prob(h, w) == doctest::Approx(expected).epsilon(1e-12));
  }
  MixtureModel one({p.a, p.b}, WeightVector{{"a", "b"}, {1.0, 0.0}});
  std::vector<WordId> h{3};
  CHECK(one.log10_prob(h, 4) == doctest::Approx(p.a->log10_prob(h, 4)).epsilon(1e-12));
}

TEST_CASE("mixture argument checks") {
  Pair p = two_models(45, 2);
  Pair q = two_models(46, 2);
  if (!(*p.vocab == *q.vocab)) {
    CHECK_THROWS_AS(check_mixture({p.a, q.a}, WeightVector{{"a", "b"}, {0.5, 0.5}}), Error);
  }
  CHECK_THROWS_AS(check_mixture({p.a, p.b}, WeightVector{{"a", "b"}, {0.6, 0.6}}), Error);
  CHECK_THROWS_AS(check_mixture({p.a, p.b}, WeightVector{{"a"}, {1.0}}), Error);
}

TEST_CASE("EM keeps identical components uniform") {
  Pair p = two_models(47, 2);
  EmResult r = fit_weights_em({p.a, p.a}, p.heldout);
  CHECK(r.weights.values[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.weights.values[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("EM with a single component stops immediately") {
  Pair p = two_models(48, 2);
  EmResult r = fit_weights_em({p.a}, p.heldout);
  CHECK(r.iterations == 0);
  CHECK(r.weights.values == std::vector<double>{1.0});
}

TEST_CASE("EM favors the component that explains the held-out text") {
  Pair p = two_models(49, 2);
  LexiconConfig lex{49, 60, 8};
  auto held = map_corpus(*p.vocab, TextSource(lex, 50).corpus(60, 51));
  EmResult r = fit_weights_em({p.a, p.b}, held);
  for (std::size_t i = 1; i < r.log_likelihood.size(); ++i) CHECK(r.log_likelihood[i] >= r.log_likelihood[i - 1]);
  CHECK(r.weights.on_simplex());
  CHECK(r.weights.values[0] > 0.9);
}

TEST_CASE("EM lands on the grid-search optimum and beats both components") {
  Pair p = two_models(52, 2);
  ComponentList comps{p.a, p.b};
  EmResult r = fit_weights_em(comps, p.heldout);
  double best_ll = -INFINITY, best_l = 0;
  for (int k = 0; k <= 100; ++k) {
    double l = k / 100.0;
    MixtureModel mix(comps, WeightVector{{"a", "b"}, {l, 1 - l}});
    double ll = perplexity(mix, p.heldout).total_log_prob;
    if (ll > best_ll) {
      best_ll = ll;
      best_l = l;
    }
  }
  CHECK(std::fabs(r.weights.values[0] - best_l) <= 0.02);
  double mixed = perplexity(MixtureModel(comps, r.weights), p.heldout).ppl;
  CHECK(mixed <= perplexity(*p.a, p.heldout).ppl);
  CHECK(mixed <= perplexity(*p.b, p.heldout).ppl);
}

TEST_CASE("EM needs held-out tokens") {
  Pair p = two_models(53, 2);
  std::vector<IdSentence> none;
  CHECK_THROWS_AS(fit_weights_em({p.a, p.b}, none), Error);
}
