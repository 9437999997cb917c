#include "lmkit/tune.hh"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "lmkit/error.hh"
#include "lmkit/eval.hh"
#include "lmkit/io.hh"
#include "lmkit/vocab.hh"

namespace lmkit {

TuneSet make_tune_set(std::vector<TuneItem> items) {
  if (items.empty()) throw Error(ErrorCode::kEmptyTuneSet, "tune set has no items");
  TuneSet ts;
  ts.labels = items.front().lattice.labels();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].lattice.empty()) throw Error(ErrorCode::kEmptyLattice, "tune item " + std::to_string(i) + " has an empty lattice");
    if (items[i].reference.empty()) throw Error(ErrorCode::kEmptyReference, "tune item " + std::to_string(i) + " has an empty reference");
    if (items[i].lattice.labels() != ts.labels) {
      throw Error(ErrorCode::kLabelMismatch, "tune item " + std::to_string(i) + " has different feature labels");
    }
  }
  ts.items = std::move(items);
  return ts;
}

TuneSet read_tune_manifest(const std::string &path) {
  std::ifstream in = open_input(path);
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<TuneItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line_no) + ": expected 'lattice<TAB>reference'");
    }
    std::filesystem::path lattice_path(line.substr(0, tab));
    if (lattice_path.is_relative()) lattice_path = base / lattice_path;
    items.push_back(TuneItem{read_lattice_file(lattice_path.string()), split_words(std::string_view(line).substr(tab + 1))});
  }
  return make_tune_set(std::move(items));
}

Envelope envelope_sweep(std::span<const Line> lines) {
  Envelope env;
  if (lines.empty()) return env;
  std::vector<std::size_t> order(lines.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Slope ascending; for equal slopes the best line comes first.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (lines[a].slope != lines[b].slope) return lines[a].slope < lines[b].slope;
    return lines[a].offset > lines[b].offset;
  });

  auto cross = [&](std::size_t a, std::size_t b) {
    return (lines[a].offset - lines[b].offset) / (lines[b].slope - lines[a].slope);
  };
  std::vector<std::size_t> hull;
  std::vector<double> starts;  // x where hull[i] starts winning
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::size_t i = order[k];
    if (!hull.empty() && lines[hull.back()].slope == lines[i].slope) continue;
    double x = -std::numeric_limits<double>::infinity();
    while (!hull.empty()) {
      x = cross(hull.back(), i);
      if (x <= starts.back()) {
        hull.pop_back();
        starts.pop_back();
        x = -std::numeric_limits<double>::infinity();
      } else {
        break;
      }
    }
    hull.push_back(i);
    starts.push_back(x);
  }
  for (std::size_t k = 0; k < hull.size(); ++k) {
    EnvelopeInterval iv;
    iv.lo = starts[k];
    iv.hi = k + 1 < hull.size() ? starts[k + 1] : std::numeric_limits<double>::infinity();
    iv.line = hull[k];
    iv.errors = lines[hull[k]].errors;
    env.intervals.push_back(iv);
  }
  env.best = best_interval(env.intervals);
  return env;
}

std::size_t best_interval(std::span<const EnvelopeInterval> intervals) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < intervals.size(); ++i) {
    const EnvelopeInterval &a = intervals[i], &b = intervals[best];
    if (a.errors != b.errors) {
      if (a.errors < b.errors) best = i;
      continue;
    }
    // Intervals are ordered left to right, so on equal width the earlier one stays.
    if (a.hi - a.lo > b.hi - b.lo) best = i;
  }
  return best;
}

double interval_point(const EnvelopeInterval &iv) {
  bool lo_inf = std::isinf(iv.lo), hi_inf = std::isinf(iv.hi);
  if (lo_inf && hi_inf) return 0;
  if (lo_inf) return iv.hi - 1;
  if (hi_inf) return iv.lo + 1;
  return iv.lo + (iv.hi - iv.lo) / 2;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

WeightVector as_weights(const std::vector<std::string> &labels, const std::vector<double> &values) {
  return WeightVector{labels, values};
}

struct PoolHyp {
  std::vector<std::string> words;
  std::vector<double> features;
  std::size_t errors = 0;
};

// Hypotheses are kept ordered by word sequence, so the first of several
// equal scores is the lexicographically smallest, as in best_path.
struct Pool {
  std::map<std::pair<std::vector<std::string>, std::vector<double>>, std::size_t> errors;
  std::vector<PoolHyp> hyps;

  void rebuild() {
    hyps.clear();
    for (const auto &[key, e] : errors) hyps.push_back(PoolHyp{key.first, key.second, e});
  }
};

class Optimizer {
 public:
  Optimizer(const TuneSet &ts, const MertOptions &options) : ts_(ts), options_(options), pools_(ts.items.size()) {
    if (options.directions.empty()) {
      for (std::size_t i = 0; i < ts.labels.size(); ++i) {
        std::vector<double> d(ts.labels.size(), 0.0);
        d[i] = 1;
        directions_.push_back(std::move(d));
      }
    } else {
      directions_ = options.directions;
      for (const auto &d : directions_) {
        if (d.size() != ts.labels.size()) throw Error(ErrorCode::kLabelMismatch, "direction length differs from label count");
      }
    }
  }

  void extend_pools(const std::vector<double> &w) {
    WeightVector wv = as_weights(ts_.labels, w);
    for (std::size_t i = 0; i < ts_.items.size(); ++i) {
      const TuneItem &item = ts_.items[i];
      for (Hypothesis &h : nbest(item.lattice, wv, options_.nbest_size)) {
        auto key = std::make_pair(std::move(h.words), std::move(h.features));
        if (pools_[i].errors.count(key)) continue;
        std::size_t e = word_error_rate(key.first, item.reference).errors();
        pools_[i].errors.emplace(std::move(key), e);
      }
      pools_[i].rebuild();
    }
  }

  std::size_t pool_errors(const std::vector<double> &w) const {
    std::size_t total = 0;
    for (const Pool &pool : pools_) {
      std::size_t best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < pool.hyps.size(); ++k) {
        double s = dot(w, pool.hyps[k].features);
        if (k == 0 || s > best_score) {
          best_score = s;
          best = k;
        }
      }
      total += pool.hyps[best].errors;
    }
    return total;
  }

  // One pass over all directions.  Returns true when the pool error dropped.
  bool line_searches(std::vector<double> &w) {
    std::size_t current = pool_errors(w);
    bool improved = false;
    for (const std::vector<double> &d : directions_) {
      std::vector<Envelope> envs;
      std::vector<double> bounds;
      for (const Pool &pool : pools_) {
        std::vector<Line> lines;
        for (const PoolHyp &h : pool.hyps) lines.push_back(Line{dot(w, h.features), dot(d, h.features), h.errors});
        envs.push_back(envelope_sweep(lines));
        for (const EnvelopeInterval &iv : envs.back().intervals) {
          if (std::isfinite(iv.lo)) bounds.push_back(iv.lo);
        }
      }
      std::sort(bounds.begin(), bounds.end());
      bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

      std::vector<EnvelopeInterval> merged(bounds.size() + 1);
      for (std::size_t j = 0; j < merged.size(); ++j) {
        merged[j].lo = j == 0 ? -std::numeric_limits<double>::infinity() : bounds[j - 1];
        merged[j].hi = j == bounds.size() ? std::numeric_limits<double>::infinity() : bounds[j];
      }
      for (const Envelope &env : envs) {
        std::size_t idx = 0;
        for (EnvelopeInterval &m : merged) {
          while (idx + 1 < env.intervals.size() && env.intervals[idx].hi <= m.lo) ++idx;
          m.errors += env.intervals[idx].errors;
        }
      }
      const EnvelopeInterval &best = merged[best_interval(merged)];
      if (best.errors >= current) continue;
      double gamma = interval_point(best);
      std::vector<double> candidate = w;
      for (std::size_t i = 0; i < w.size(); ++i) candidate[i] += gamma * d[i];
      std::size_t e = pool_errors(candidate);
      if (e < current) {
        w = std::move(candidate);
        current = e;
        improved = true;
      }
    }
    return improved;
  }

  double corpus_wer(const std::vector<double> &w) const { return tune_set_wer(ts_, as_weights(ts_.labels, w)); }

  const std::vector<std::vector<double>> &directions() const { return directions_; }

 private:
  const TuneSet &ts_;
  const MertOptions &options_;
  std::vector<Pool> pools_;
  std::vector<std::vector<double>> directions_;
};

}  // namespace

double tune_set_wer(const TuneSet &ts, const WeightVector &weights) {
  if (ts.items.empty()) throw Error(ErrorCode::kEmptyTuneSet, "tune set has no items");
  std::vector<HypRef> pairs;
  pairs.reserve(ts.items.size());
  for (const TuneItem &item : ts.items) pairs.push_back(HypRef{best_path(item.lattice, weights).words, item.reference});
  return corpus_wer(pairs).wer;
}

MertResult mert(const TuneSet &ts, const WeightVector &init, const MertOptions &options) {
  if (ts.items.empty()) throw Error(ErrorCode::kEmptyTuneSet, "tune set has no items");
  if (options.nbest_size < 1) throw Error(ErrorCode::kBadArgument, "n-best size must be >= 1");
  std::vector<double> start;
  for (const std::string &label : ts.labels) start.push_back(init.at(label));
  WeightVector(ts.labels, start).validate();

  Optimizer opt(ts, options);
  MertResult result;
  result.initial_wer = opt.corpus_wer(start);
  result.final_wer = result.initial_wer;
  result.wer_trace.push_back(result.initial_wer);
  std::vector<double> best_w = start;

  std::mt19937_64 rng(options.seed);
  auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  for (std::size_t run = 0; run <= options.restarts; ++run) {
    std::vector<double> w = start;
    if (run > 0) {
      for (double &v : w) v = 2 * unit() - 1;
    }
    double run_best = opt.corpus_wer(w);
    std::vector<double> run_w = w;
    if (run > 0 && run_best < result.final_wer) {
      result.final_wer = run_best;
      best_w = run_w;
      result.wer_trace.push_back(run_best);
    }
    opt.extend_pools(w);
    for (std::size_t round = 0; round < options.max_rounds; ++round) {
      if (!opt.line_searches(w)) break;
      double wer = opt.corpus_wer(w);
      opt.extend_pools(w);
      if (!(wer < run_best)) break;
      run_best = wer;
      run_w = w;
      ++result.rounds;
      if (run_best < result.final_wer) {
        result.final_wer = run_best;
        best_w = run_w;
        result.wer_trace.push_back(run_best);
      }
    }
  }
  result.weights = as_weights(ts.labels, best_w);
  return result;
}

}  // namespace lmkit
