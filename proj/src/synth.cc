#include "lmkit/synth.hh"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_set>

#include "lmkit/error.hh"

namespace lmkit {

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kBadArgument, "Rng::below(0)");
  const uint64_t bound = static_cast<uint64_t>(n);
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  double u1 = 1.0 - unit();  // (0, 1]
  double u2 = unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::pick(const std::vector<double> &cum) {
  double x = unit() * cum.back();
  std::size_t i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), x) - cum.begin());
  return std::min(i, cum.size() - 1);
}

std::vector<double> cumulative(const std::vector<double> &weights) {
  std::vector<double> c(weights.size());
  double s = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) c[i] = s += weights[i];
  return c;
}

namespace {

const char *const kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "ch", "tr", "st", "br", "pl"};
const char *const kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ee"};
const char *const kCodas[] = {"", "", "", "n", "r", "s", "l", "k"};

std::string pseudo_word(Rng &rng) {
  static const std::vector<double> syllable_weights = cumulative({0.25, 0.45, 0.25, 0.05});
  std::size_t syllables = rng.pick(syllable_weights) + 1;
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += kOnsets[rng.below(std::size(kOnsets))];
    w += kVowels[rng.below(std::size(kVowels))];
    if (s + 1 == syllables || rng.chance(0.3)) w += kCodas[rng.below(std::size(kCodas))];
  }
  return w;
}

}  // namespace

TextSource::TextSource(const LexiconConfig &lexicon, uint64_t domain_seed) : classes_(lexicon.classes) {
  if (lexicon.classes < 1 || lexicon.words < lexicon.classes) {
    throw Error(ErrorCode::kBadArgument, "lexicon needs at least one word per class");
  }
  const std::size_t C = lexicon.classes;
  Rng lex(lexicon.seed);
  std::unordered_set<std::string> seen;
  while (words_.size() < lexicon.words) {
    std::string w = pseudo_word(lex);
    if (seen.insert(w).second) words_.push_back(std::move(w));
  }
  // Uneven class sizes: a few large open classes, many small closed ones.
  std::vector<double> class_weight(C);
  for (std::size_t c = 0; c < C; ++c) class_weight[c] = 1.0 / std::pow(static_cast<double>(c + 1), 0.9);
  std::vector<double> class_cum = cumulative(class_weight);
  members_.assign(C, {});
  class_of_.resize(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    std::size_t c = i < C ? i : lex.pick(class_cum);
    class_of_[i] = c;
    members_[c].push_back(i);
  }

  Rng dom(domain_seed);
  emit_.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    auto &m = members_[c];
    for (std::size_t i = m.size(); i > 1; --i) std::swap(m[i - 1], m[dom.below(i)]);
    std::vector<double> w(m.size());
    for (std::size_t r = 0; r < m.size(); ++r) w[r] = 1.0 / std::pow(static_cast<double>(r + 1), 1.1);
    emit_[c] = cumulative(w);
  }
  // States are class pairs; index C stands for the sentence start.
  transition_.resize((C + 1) * (C + 1));
  for (std::size_t c1 = 0; c1 <= C; ++c1) {
    for (std::size_t c2 = 0; c2 <= C; ++c2) {
      std::vector<double> w(C + 1, 0.01);
      for (int k = 0; k < 5; ++k) {
        double g = dom.uniform(0.5, 3.0);
        w[dom.below(C)] += g * g;
      }
      w[C] = c2 == C ? 0.0 : dom.uniform(0.2, 1.5);
      transition_[c1 * (C + 1) + c2] = cumulative(w);
    }
  }
  follower_.resize(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) follower_[i] = dom.below(words_.size());
}

Sentence TextSource::sample(Rng &rng) const {
  constexpr std::size_t kMaxLength = 30;
  constexpr double kCollocation = 0.2;
  const std::size_t C = classes_;
  std::size_t c1 = C, c2 = C;
  Sentence s;
  std::size_t pending = SIZE_MAX;
  while (s.size() < kMaxLength) {
    std::size_t w;
    if (pending != SIZE_MAX) {
      w = pending;
      pending = SIZE_MAX;
    } else {
      std::size_t c = rng.pick(transition_[c1 * (C + 1) + c2]);
      if (c == C) break;
      w = members_[c][rng.pick(emit_[c])];
      if (rng.chance(kCollocation)) pending = follower_[w];
    }
    s.push_back(words_[w]);
    c1 = c2;
    c2 = class_of_[w];
  }
  return s;
}

std::vector<Sentence> TextSource::corpus(std::size_t sentences, uint64_t seed) const {
  Rng rng(seed);
  std::vector<Sentence> out;
  out.reserve(sentences);
  for (std::size_t i = 0; i < sentences; ++i) out.push_back(sample(rng));
  return out;
}

Lattice noisy_lattice(const Sentence &reference, const std::vector<std::string> &lexicon, const LatticeNoise &noise,
                      Rng &rng) {
  if (reference.empty()) throw Error(ErrorCode::kEmptyReference, "cannot build a lattice for an empty reference");
  if (lexicon.size() < noise.confusions + 2) throw Error(ErrorCode::kBadArgument, "lexicon too small for confusions");
  const std::size_t L = reference.size();
  std::size_t nodes = L + 1;
  std::vector<EdgeSpec> edges;
  auto acoustic = [&](double gap_mean) {
    double gap = gap_mean > 0 ? -gap_mean * std::log(1.0 - rng.unit()) : 0.0;
    return -(gap + noise.acoustic_sigma * std::fabs(rng.normal()));
  };
  auto add = [&](NodeId from, NodeId to, const std::string &word, double ac) {
    edges.push_back(EdgeSpec{from, to, word, {ac, 1.0}});
  };
  auto confusion = [&](const std::set<std::string> &avoid) {
    while (true) {
      const std::string &w = lexicon[rng.below(lexicon.size())];
      if (!avoid.count(w)) return w;
    }
  };
  for (std::size_t i = 0; i < L; ++i) {
    const NodeId a = static_cast<NodeId>(i), b = static_cast<NodeId>(i + 1);
    std::set<std::string> used{reference[i]};
    add(a, b, reference[i], acoustic(0));
    for (std::size_t k = 0; k < noise.confusions; ++k) {
      std::string w = confusion(used);
      used.insert(w);
      add(a, b, w, acoustic(noise.confusion_gap));
    }
    if (i + 1 < L && rng.chance(noise.deletion_rate)) {
      add(a, static_cast<NodeId>(i + 2), rng.chance(0.5) ? reference[i] : reference[i + 1], acoustic(0));
    }
    if (rng.chance(noise.insertion_rate)) {
      const NodeId m = static_cast<NodeId>(nodes++);
      add(a, m, confusion({reference[i]}), acoustic(0) / 2);
      add(m, b, reference[i], acoustic(0) / 2);
    }
  }
  return Lattice({"ac", "ins"}, nodes, std::move(edges), {static_cast<NodeId>(L)});
}

}  // namespace lmkit
