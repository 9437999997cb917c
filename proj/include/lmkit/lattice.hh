#ifndef LMKIT_LATTICE_HH
#define LMKIT_LATTICE_HH

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lmkit/model.hh"
#include "lmkit/weights.hh"

namespace lmkit {

typedef uint32_t NodeId;

struct EdgeSpec {
  NodeId from = 0, to = 0;
  std::string word;
  std::vector<double> scores;  // one per feature label
};

// Acyclic word graph.  Node 0 is the start node; every node lies on a path
// from the start to a final node.  Edge words index a lattice-local symbol
// table kept in lexicographic order, so comparing word indices compares the
// words themselves.  Edges are kept sorted by (from, to, word, scores).
// Scores are log-domain and higher is better.
class Lattice {
 public:
  struct Edge {
    NodeId from = 0, to = 0;
    uint32_t word = 0;
    std::vector<double> scores;
  };

  Lattice() = default;  // empty lattice
  // Validates and canonicalizes.  Throws ParseError for malformed parts,
  // CycleDetected, UnreachableNode.
  Lattice(std::vector<std::string> labels, std::size_t node_count, std::vector<EdgeSpec> edges,
          std::vector<NodeId> finals, std::vector<std::optional<double>> times = {});

  bool empty() const { return node_count_ == 0; }
  std::size_t node_count() const { return node_count_; }
  NodeId start() const { return 0; }

  const std::vector<std::string> &labels() const { return labels_; }
  std::optional<std::size_t> label_index(const std::string &label) const;
  const std::vector<std::string> &symbols() const { return symbols_; }
  const std::string &word(const Edge &e) const { return symbols_[e.word]; }

  const std::vector<Edge> &edges() const { return edges_; }
  // Edge indices [begin, end) leaving `node`.
  std::pair<std::size_t, std::size_t> out_edges(NodeId node) const { return {out_begin_[node], out_begin_[node + 1]}; }
  const std::vector<NodeId> &finals() const { return finals_; }
  bool is_final(NodeId node) const { return is_final_[node]; }
  const std::vector<std::optional<double>> &times() const { return times_; }
  // Deterministic topological order of all nodes.
  const std::vector<NodeId> &topo_order() const { return topo_; }

  bool operator==(const Lattice &other) const;

 private:
  std::vector<std::string> labels_;
  std::size_t node_count_ = 0;
  std::vector<std::string> symbols_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_begin_;
  std::vector<NodeId> finals_;
  std::vector<bool> is_final_;
  std::vector<std::optional<double>> times_;
  std::vector<NodeId> topo_;
};

// Text format:
//   N <nodes> E <edges> F <label...>
//   n <id> [time]
//   e <from> <to> <word> <score...>
//   f <id...>
void write_lattice(const Lattice &lattice, std::ostream &out);
Lattice read_lattice(std::istream &in);
void write_lattice_file(const Lattice &lattice, const std::string &path);
Lattice read_lattice_file(const std::string &path);

struct LmQuery {
  std::vector<WordId> history;
  WordId word = 0;
};

// Scores a batch of queries, returning log10 probabilities in query order.
typedef std::function<std::vector<double>(const std::vector<LmQuery> &)> BatchScorer;

// Exact (n-1)-gram context expansion.  Output states are (node, last n-1
// words) pairs reachable from (start, <s>...); the `lm_label` score of each
// edge becomes log10 P(word | context), and edges entering a final node also
// carry log10 P(</s> | context').  A final node that has outgoing edges is
// split into a final leaf copy so the end probability applies only to paths
// that stop there.  Other labels are copied unchanged; a new label is
// appended when `lm_label` is not present yet.  Queries are issued one batch
// per topological level of the input lattice.
Lattice rescore_batched(const Lattice &lattice, const Vocabulary &vocab, int order, const std::string &lm_label,
                        const BatchScorer &scorer);

Lattice rescore(const Lattice &lattice, const LanguageModel &lm, const std::string &lm_label, int order);

struct Hypothesis {
  std::vector<std::string> words;
  std::vector<double> features;  // per lattice label, summed along the path
  double score = 0;              // dot(weights, features)
};

// Weight per lattice label (extra weights are ignored; missing ones throw LabelMismatch).
std::vector<double> weights_for(const Lattice &lattice, const WeightVector &weights);

// Highest combined score over complete paths; ties go to the lexicographically
// smallest word sequence.
Hypothesis best_path(const Lattice &lattice, const WeightVector &weights);

// Top-n distinct word sequences, best first.  Each sequence reports its
// best-scoring path.
std::vector<Hypothesis> nbest(const Lattice &lattice, const WeightVector &weights, std::size_t n);

}  // namespace lmkit

#endif  // LMKIT_LATTICE_HH
