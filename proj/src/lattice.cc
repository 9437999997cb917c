#include "lmkit/lattice.hh"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <set>

#include "lmkit/error.hh"
#include "lmkit/io.hh"

namespace lmkit {

Lattice::Lattice(std::vector<std::string> labels, std::size_t node_count, std::vector<EdgeSpec> edges,
                 std::vector<NodeId> finals, std::vector<std::optional<double>> times)
    : labels_(std::move(labels)), node_count_(node_count) {
  if (times.empty()) times.assign(node_count, std::nullopt);
  if (times.size() != node_count) throw Error(ErrorCode::kParseError, "node time count does not match node count");
  times_ = std::move(times);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (labels_[i] == labels_[j]) throw Error(ErrorCode::kParseError, "duplicate feature label '" + labels_[i] + "'");
    }
  }

  for (const EdgeSpec &e : edges) symbols_.push_back(e.word);
  std::sort(symbols_.begin(), symbols_.end());
  symbols_.erase(std::unique(symbols_.begin(), symbols_.end()), symbols_.end());

  edges_.reserve(edges.size());
  for (EdgeSpec &e : edges) {
    if (e.from >= node_count || e.to >= node_count) {
      throw Error(ErrorCode::kParseError, "edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                                              " references an undeclared node");
    }
    if (e.scores.size() != labels_.size()) {
      throw Error(ErrorCode::kParseError, "edge has " + std::to_string(e.scores.size()) + " scores for " +
                                              std::to_string(labels_.size()) + " labels");
    }
    uint32_t word = static_cast<uint32_t>(std::lower_bound(symbols_.begin(), symbols_.end(), e.word) - symbols_.begin());
    edges_.push_back(Edge{e.from, e.to, word, std::move(e.scores)});
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge &a, const Edge &b) {
    if (a.from != b.from) return a.from < b.from;
    if (a.to != b.to) return a.to < b.to;
    if (a.word != b.word) return a.word < b.word;
    return a.scores < b.scores;
  });

  out_begin_.assign(node_count + 1, 0);
  for (const Edge &e : edges_) ++out_begin_[e.from + 1];
  for (std::size_t i = 0; i < node_count; ++i) out_begin_[i + 1] += out_begin_[i];

  if (node_count == 0) {
    if (!finals.empty()) throw Error(ErrorCode::kParseError, "final node in a lattice without nodes");
    return;
  }

  is_final_.assign(node_count, false);
  for (NodeId f : finals) {
    if (f >= node_count) throw Error(ErrorCode::kParseError, "final node " + std::to_string(f) + " is undeclared");
    is_final_[f] = true;
  }
  for (NodeId i = 0; i < node_count; ++i) {
    if (is_final_[i]) finals_.push_back(i);
  }

  // Kahn's algorithm, smallest ready id first.
  std::vector<std::size_t> indegree(node_count, 0);
  for (const Edge &e : edges_) ++indegree[e.to];
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<NodeId>> ready;
  for (NodeId i = 0; i < node_count; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  while (!ready.empty()) {
    NodeId v = ready.top();
    ready.pop();
    topo_.push_back(v);
    for (std::size_t k = out_begin_[v]; k < out_begin_[v + 1]; ++k) {
      if (--indegree[edges_[k].to] == 0) ready.push(edges_[k].to);
    }
  }
  if (topo_.size() != node_count) throw Error(ErrorCode::kCycleDetected, "lattice contains a cycle");

  std::vector<bool> forward(node_count, false), backward(node_count, false);
  forward[0] = true;
  for (NodeId v : topo_) {
    if (!forward[v]) continue;
    for (std::size_t k = out_begin_[v]; k < out_begin_[v + 1]; ++k) forward[edges_[k].to] = true;
  }
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
    NodeId v = *it;
    if (is_final_[v]) backward[v] = true;
    for (std::size_t k = out_begin_[v]; k < out_begin_[v + 1]; ++k) {
      if (backward[edges_[k].to]) backward[v] = true;
    }
  }
  for (NodeId i = 0; i < node_count; ++i) {
    if (!forward[i] || !backward[i]) {
      throw Error(ErrorCode::kUnreachableNode, "node " + std::to_string(i) + " is not on a start-to-final path");
    }
  }
}

std::optional<std::size_t> Lattice::label_index(const std::string &label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

bool Lattice::operator==(const Lattice &other) const {
  if (labels_ != other.labels_ || node_count_ != other.node_count_ || symbols_ != other.symbols_ ||
      finals_ != other.finals_ || times_ != other.times_ || edges_.size() != other.edges_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge &a = edges_[i], &b = other.edges_[i];
    if (a.from != b.from || a.to != b.to || a.word != b.word || a.scores != b.scores) return false;
  }
  return true;
}

void write_lattice(const Lattice &lattice, std::ostream &out) {
  out << "N " << lattice.node_count() << " E " << lattice.edges().size() << " F";
  for (const std::string &l : lattice.labels()) out << ' ' << l;
  out << '\n';
  for (NodeId i = 0; i < lattice.node_count(); ++i) {
    out << "n " << i;
    if (lattice.times()[i]) out << ' ' << format_shortest(*lattice.times()[i]);
    out << '\n';
  }
  for (const Lattice::Edge &e : lattice.edges()) {
    out << "e " << e.from << ' ' << e.to << ' ' << lattice.word(e);
    for (double s : e.scores) out << ' ' << format_shortest(s);
    out << '\n';
  }
  out << 'f';
  for (NodeId f : lattice.finals()) out << ' ' << f;
  out << '\n';
}

Lattice read_lattice(std::istream &in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string &what) -> Error {
    return Error(ErrorCode::kParseError, "lattice line " + std::to_string(line_no) + ": " + what);
  };

  std::optional<std::size_t> nodes, edge_count;
  std::vector<std::string> labels;
  std::vector<std::optional<double>> times;
  std::vector<bool> declared;
  std::vector<EdgeSpec> edges;
  std::vector<NodeId> finals;
  bool saw_final_line = false;

  while (std::getline(in, line)) {
    ++line_no;
    Sentence f = split_words(line);
    if (f.empty()) continue;
    if (!nodes) {
      if (f.size() < 5 || f[0] != "N" || f[2] != "E" || f[4] != "F") throw fail("expected 'N <nodes> E <edges> F <labels...>'");
      nodes = static_cast<std::size_t>(parse_count(f[1], line_no));
      edge_count = static_cast<std::size_t>(parse_count(f[3], line_no));
      labels.assign(f.begin() + 5, f.end());
      times.assign(*nodes, std::nullopt);
      declared.assign(*nodes, false);
      continue;
    }
    if (f[0] == "n") {
      if (f.size() != 2 && f.size() != 3) throw fail("expected 'n <id> [time]'");
      Count id = parse_count(f[1], line_no);
      if (id >= *nodes) throw fail("node id " + f[1] + " outside 0.." + std::to_string(*nodes) + "-1");
      if (declared[id]) throw fail("node " + f[1] + " declared twice");
      declared[id] = true;
      if (f.size() == 3) times[id] = parse_double(f[2], line_no);
    } else if (f[0] == "e") {
      if (f.size() != 4 + labels.size()) throw fail("expected 'e <from> <to> <word>' and " + std::to_string(labels.size()) + " scores");
      EdgeSpec e;
      Count from = parse_count(f[1], line_no), to = parse_count(f[2], line_no);
      if (from >= *nodes || !declared[from] || to >= *nodes || !declared[to]) throw fail("edge references an undeclared node");
      e.from = static_cast<NodeId>(from);
      e.to = static_cast<NodeId>(to);
      e.word = f[3];
      for (std::size_t i = 4; i < f.size(); ++i) e.scores.push_back(parse_double(f[i], line_no));
      edges.push_back(std::move(e));
    } else if (f[0] == "f") {
      saw_final_line = true;
      for (std::size_t i = 1; i < f.size(); ++i) {
        Count id = parse_count(f[i], line_no);
        if (id >= *nodes || !declared[id]) throw fail("final node " + f[i] + " is undeclared");
        finals.push_back(static_cast<NodeId>(id));
      }
    } else {
      throw fail("unknown record '" + f[0] + "'");
    }
  }
  if (!nodes) throw Error(ErrorCode::kParseError, "lattice has no header");
  if (std::count(declared.begin(), declared.end(), true) != static_cast<long>(*nodes)) {
    throw Error(ErrorCode::kParseError, "header declares " + std::to_string(*nodes) + " nodes but fewer are listed");
  }
  if (edges.size() != *edge_count) {
    throw Error(ErrorCode::kParseError, "header declares " + std::to_string(*edge_count) + " edges but " +
                                            std::to_string(edges.size()) + " are listed");
  }
  if (*nodes > 0 && !saw_final_line) throw Error(ErrorCode::kParseError, "lattice has no final-node line");
  return Lattice(std::move(labels), *nodes, std::move(edges), std::move(finals), std::move(times));
}

void write_lattice_file(const Lattice &lattice, const std::string &path) {
  std::ofstream out = open_output(path);
  write_lattice(lattice, out);
  finish_output(out, path);
}

Lattice read_lattice_file(const std::string &path) {
  std::ifstream in = open_input(path);
  return read_lattice(in);
}

Lattice rescore_batched(const Lattice &lattice, const Vocabulary &vocab, int order, const std::string &lm_label,
                        const BatchScorer &scorer) {
  if (lattice.empty()) throw Error(ErrorCode::kEmptyLattice, "cannot rescore an empty lattice");
  if (order < 1) throw Error(ErrorCode::kBadOrder, "rescoring order must be >= 1");
  if (lattice.is_final(lattice.start())) {
    throw Error(ErrorCode::kBadArgument, "start node is final; an empty path has no edge to carry P(</s>)");
  }
  const std::size_t context_len = static_cast<std::size_t>(order - 1);

  std::vector<WordId> lm_id(lattice.symbols().size());
  for (std::size_t i = 0; i < lm_id.size(); ++i) lm_id[i] = vocab.id(lattice.symbols()[i]);

  std::vector<std::string> labels = lattice.labels();
  std::size_t lm_index;
  if (auto i = lattice.label_index(lm_label)) {
    lm_index = *i;
  } else {
    lm_index = labels.size();
    labels.push_back(lm_label);
  }

  // Longest-path depth groups nodes into levels whose predecessors are all shallower.
  std::vector<std::size_t> depth(lattice.node_count(), 0);
  std::size_t max_depth = 0;
  for (NodeId v : lattice.topo_order()) {
    auto [b, e] = lattice.out_edges(v);
    for (std::size_t k = b; k < e; ++k) {
      NodeId to = lattice.edges()[k].to;
      depth[to] = std::max(depth[to], depth[v] + 1);
      max_depth = std::max(max_depth, depth[to]);
    }
  }
  std::vector<std::vector<NodeId>> by_depth(max_depth + 1);
  for (NodeId v = 0; v < lattice.node_count(); ++v) by_depth[depth[v]].push_back(v);

  struct State {
    NodeId node;
    std::vector<WordId> context;
  };
  std::vector<State> states;
  std::vector<std::map<std::vector<WordId>, uint32_t>> state_of(lattice.node_count());
  auto state_for = [&](NodeId node, std::vector<WordId> context) {
    auto [it, inserted] = state_of[node].emplace(context, static_cast<uint32_t>(states.size()));
    if (inserted) states.push_back(State{node, std::move(context)});
    return it->second;
  };
  state_for(lattice.start(), std::vector<WordId>(context_len, kBosId));

  struct OutEdge {
    uint32_t from, to;
    std::size_t source;  // input edge index
    double lm;
  };
  std::vector<OutEdge> out_edges;
  std::vector<double> end_score(0);
  std::vector<bool> has_end;

  constexpr std::size_t kEndMarker = std::numeric_limits<std::size_t>::max();
  std::vector<LmQuery> queries;
  std::vector<std::pair<uint32_t, std::size_t>> refs;  // (state, input edge or kEndMarker)
  for (const std::vector<NodeId> &level : by_depth) {
    queries.clear();
    refs.clear();
    for (NodeId v : level) {
      for (const auto &[context, s] : state_of[v]) {
        auto [b, e] = lattice.out_edges(v);
        for (std::size_t k = b; k < e; ++k) {
          queries.push_back(LmQuery{context, lm_id[lattice.edges()[k].word]});
          refs.emplace_back(s, k);
        }
        if (lattice.is_final(v)) {
          queries.push_back(LmQuery{context, kEosId});
          refs.emplace_back(s, kEndMarker);
        }
      }
    }
    if (queries.empty()) continue;
    std::vector<double> scores = scorer(queries);
    if (scores.size() != queries.size()) throw Error(ErrorCode::kBadArgument, "scorer returned a short batch");
    for (std::size_t q = 0; q < refs.size(); ++q) {
      auto [s, k] = refs[q];
      if (k == kEndMarker) {
        if (has_end.size() <= s) {
          has_end.resize(s + 1, false);
          end_score.resize(s + 1, 0.0);
        }
        has_end[s] = true;
        end_score[s] = scores[q];
        continue;
      }
      const Lattice::Edge &edge = lattice.edges()[k];
      std::vector<WordId> next;
      if (context_len > 0) {
        const std::vector<WordId> &ctx = states[s].context;
        next.assign(ctx.begin() + 1, ctx.end());
        next.push_back(lm_id[edge.word]);
      }
      uint32_t t = state_for(edge.to, std::move(next));
      out_edges.push_back(OutEdge{s, t, k, scores[q]});
    }
  }

  // Final states: leaves absorb P(</s>) on their incoming edges; final states
  // with successors get a final leaf copy.
  const std::size_t state_count = states.size();
  std::vector<uint32_t> final_copy(state_count, 0);
  std::size_t node_total = state_count;
  std::vector<NodeId> finals;
  std::vector<std::optional<double>> times;
  for (const State &st : states) times.push_back(lattice.times()[st.node]);
  for (uint32_t s = 0; s < state_count; ++s) {
    if (!lattice.is_final(states[s].node)) continue;
    auto [b, e] = lattice.out_edges(states[s].node);
    if (b == e) {
      finals.push_back(s);
    } else {
      final_copy[s] = static_cast<uint32_t>(node_total++);
      finals.push_back(final_copy[s]);
      times.push_back(lattice.times()[states[s].node]);
    }
  }

  std::vector<EdgeSpec> edges;
  edges.reserve(out_edges.size());
  auto emit = [&](uint32_t from, uint32_t to, std::size_t source, double lm) {
    const Lattice::Edge &src = lattice.edges()[source];
    EdgeSpec copy{from, to, lattice.word(src), src.scores};
    if (lm_index == copy.scores.size()) copy.scores.push_back(lm); else copy.scores[lm_index] = lm;
    edges.push_back(std::move(copy));
  };
  for (const OutEdge &oe : out_edges) {
    NodeId node = states[oe.to].node;
    if (!lattice.is_final(node)) {
      emit(oe.from, oe.to, oe.source, oe.lm);
      continue;
    }
    auto [b, e] = lattice.out_edges(node);
    double with_end = oe.lm + end_score[oe.to];
    if (b == e) {
      emit(oe.from, oe.to, oe.source, with_end);
    } else {
      emit(oe.from, oe.to, oe.source, oe.lm);
      emit(oe.from, final_copy[oe.to], oe.source, with_end);
    }
  }
  return Lattice(std::move(labels), node_total, std::move(edges), std::move(finals), std::move(times));
}

Lattice rescore(const Lattice &lattice, const LanguageModel &lm, const std::string &lm_label, int order) {
  return rescore_batched(lattice, lm.vocab(), order, lm_label, [&lm](const std::vector<LmQuery> &queries) {
    std::vector<double> out;
    out.reserve(queries.size());
    for (const LmQuery &q : queries) out.push_back(lm.log10_prob(q.history, q.word));
    return out;
  });
}

std::vector<double> weights_for(const Lattice &lattice, const WeightVector &weights) {
  std::vector<double> w;
  for (const std::string &label : lattice.labels()) w.push_back(weights.at(label));
  return w;
}

namespace {

double dot(const std::vector<double> &w, const std::vector<double> &x) {
  double s = 0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

constexpr long kStop = -1;
constexpr long kNone = -2;

struct BackwardBest {
  std::vector<double> score;
  std::vector<long> next;  // edge index, kStop or kNone
};

// Best completion from every node, lexicographically smallest among ties.
BackwardBest best_completions(const Lattice &lattice, const std::vector<double> &edge_score) {
  const std::size_t n = lattice.node_count();
  BackwardBest best{std::vector<double>(n, -std::numeric_limits<double>::infinity()), std::vector<long>(n, kNone)};
  // Compares the completion sequences starting at a and at b.
  auto compare_from = [&](long a_next, long b_next) {
    while (true) {
      if (a_next < 0 && b_next < 0) return 0;
      if (a_next < 0) return -1;
      if (b_next < 0) return 1;
      uint32_t wa = lattice.edges()[a_next].word, wb = lattice.edges()[b_next].word;
      if (wa != wb) return wa < wb ? -1 : 1;
      a_next = best.next[lattice.edges()[a_next].to];
      b_next = best.next[lattice.edges()[b_next].to];
    }
  };
  const auto &topo = lattice.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    NodeId v = *it;
    if (lattice.is_final(v)) {
      best.score[v] = 0;
      best.next[v] = kStop;
    }
    auto [b, e] = lattice.out_edges(v);
    for (std::size_t k = b; k < e; ++k) {
      NodeId to = lattice.edges()[k].to;
      if (best.next[to] == kNone) continue;
      double s = edge_score[k] + best.score[to];
      long cand = static_cast<long>(k);
      if (best.next[v] == kNone || s > best.score[v] ||
          (s == best.score[v] && compare_from(cand, best.next[v]) < 0)) {
        best.score[v] = s;
        best.next[v] = cand;
      }
    }
  }
  return best;
}

Hypothesis make_hypothesis(const Lattice &lattice, const std::vector<double> &w, const std::vector<std::size_t> &path) {
  Hypothesis h;
  h.features.assign(lattice.labels().size(), 0.0);
  for (std::size_t k : path) {
    const Lattice::Edge &e = lattice.edges()[k];
    h.words.push_back(lattice.word(e));
    for (std::size_t i = 0; i < e.scores.size(); ++i) h.features[i] += e.scores[i];
  }
  h.score = dot(w, h.features);
  return h;
}

std::vector<double> edge_scores(const Lattice &lattice, const std::vector<double> &w) {
  std::vector<double> s;
  s.reserve(lattice.edges().size());
  for (const Lattice::Edge &e : lattice.edges()) s.push_back(dot(w, e.scores));
  return s;
}

}  // namespace

Hypothesis best_path(const Lattice &lattice, const WeightVector &weights) {
  if (lattice.empty()) throw Error(ErrorCode::kEmptyLattice, "no paths in an empty lattice");
  std::vector<double> w = weights_for(lattice, weights);
  BackwardBest best = best_completions(lattice, edge_scores(lattice, w));
  std::vector<std::size_t> path;
  for (long k = best.next[lattice.start()]; k >= 0; k = best.next[lattice.edges()[k].to]) {
    path.push_back(static_cast<std::size_t>(k));
  }
  return make_hypothesis(lattice, w, path);
}

std::vector<Hypothesis> nbest(const Lattice &lattice, const WeightVector &weights, std::size_t n) {
  if (lattice.empty()) throw Error(ErrorCode::kEmptyLattice, "no paths in an empty lattice");
  if (n < 1) throw Error(ErrorCode::kBadArgument, "n-best size must be >= 1");
  std::vector<double> w = weights_for(lattice, weights);
  std::vector<double> es = edge_scores(lattice, w);
  BackwardBest best = best_completions(lattice, es);

  // A* over partial paths with the exact completion score as heuristic, so
  // complete paths come off the queue best first.
  struct Node {
    long parent;
    long edge;
  };
  std::vector<Node> arena;
  struct Item {
    double f, g;
    NodeId node;
    bool done;
    std::size_t arena_index;
    std::vector<uint32_t> words;
  };
  auto worse = [](const Item &a, const Item &b) {
    if (a.f != b.f) return a.f < b.f;
    if (a.words != b.words) return a.words > b.words;
    if (a.done != b.done) return !a.done;
    return a.arena_index > b.arena_index;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(worse)> queue(worse);
  arena.push_back(Node{-1, -1});
  queue.push(Item{best.score[lattice.start()], 0.0, lattice.start(), false, 0, {}});

  std::set<std::vector<uint32_t>> seen;
  std::vector<Hypothesis> out;
  while (!queue.empty() && out.size() < n) {
    Item item = queue.top();
    queue.pop();
    if (item.done) {
      if (!seen.insert(item.words).second) continue;
      std::vector<std::size_t> path;
      for (long a = static_cast<long>(item.arena_index); arena[a].edge >= 0; a = arena[a].parent) {
        path.push_back(static_cast<std::size_t>(arena[a].edge));
      }
      std::reverse(path.begin(), path.end());
      out.push_back(make_hypothesis(lattice, w, path));
      continue;
    }
    if (lattice.is_final(item.node)) {
      Item done = item;
      done.f = item.g;
      done.done = true;
      queue.push(std::move(done));
    }
    auto [b, e] = lattice.out_edges(item.node);
    for (std::size_t k = b; k < e; ++k) {
      const Lattice::Edge &edge = lattice.edges()[k];
      if (best.next[edge.to] == kNone) continue;
      arena.push_back(Node{static_cast<long>(item.arena_index), static_cast<long>(k)});
      Item next{0, item.g + es[k], edge.to, false, arena.size() - 1, item.words};
      next.f = next.g + best.score[edge.to];
      next.words.push_back(edge.word);
      queue.push(std::move(next));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Hypothesis &a, const Hypothesis &b) {
    if (a.score != b.score) return a.score > b.score;
    return a.words < b.words;
  });
  return out;
}

}  // namespace lmkit
