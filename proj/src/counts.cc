#include "lmkit/counts.hh"

#include <istream>
#include <ostream>

#include "lmkit/error.hh"
#include "lmkit/io.hh"

namespace lmkit {

CountTable::CountTable(int order) {
  if (order < 1) throw Error(ErrorCode::kBadOrder, "order must be >= 1, got " + std::to_string(order));
  levels_.resize(order);
  for (int n = 1; n <= order; ++n) levels_[n - 1].keys = NgramIndex(n);
}

std::size_t CountTable::total_size() const {
  std::size_t total = 0;
  for (const Level &l : levels_) total += l.keys.size();
  return total;
}

Count CountTable::get(std::span<const WordId> ngram) const {
  if (ngram.empty() || static_cast<int>(ngram.size()) > order()) return 0;
  const Level &l = levels_[ngram.size() - 1];
  auto i = l.keys.find(ngram);
  return i ? l.counts[*i] : 0;
}

bool CountTable::operator==(const CountTable &other) const {
  if (order() != other.order() || adjusted_ != other.adjusted_) return false;
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i].keys.data() != other.levels_[i].keys.data()) return false;
    if (levels_[i].counts != other.levels_[i].counts) return false;
  }
  return true;
}

CountTable CountTable::from_unsorted(int order, std::vector<std::vector<WordId>> flat_keys,
                                     std::vector<std::vector<Count>> counts, bool adjusted) {
  CountTable table(order);
  table.adjusted_ = adjusted;
  for (int n = 1; n <= order; ++n) {
    const std::vector<WordId> &ids = flat_keys.at(n - 1);
    const std::vector<Count> &c = counts.at(n - 1);
    std::vector<std::size_t> perm = sort_order(ids, n);
    Level &level = table.levels_[n - 1];
    level.keys.reserve(perm.size());
    level.counts.reserve(perm.size());
    std::span<const WordId> prev;
    for (std::size_t p : perm) {
      std::span<const WordId> key(ids.data() + p * n, static_cast<std::size_t>(n));
      if (!level.counts.empty() && std::equal(key.begin(), key.end(), prev.begin())) {
        level.counts.back() += c[p];
      } else {
        level.keys.push_back(key);
        level.counts.push_back(c[p]);
      }
      prev = key;
    }
    // Drop zero entries left by zero input counts.
    if (std::find(level.counts.begin(), level.counts.end(), Count{0}) != level.counts.end()) {
      Level compact{NgramIndex(n), {}};
      for (std::size_t i = 0; i < level.counts.size(); ++i) {
        if (level.counts[i] == 0) continue;
        compact.keys.push_back(level.keys.key(i));
        compact.counts.push_back(level.counts[i]);
      }
      level = std::move(compact);
    }
  }
  return table;
}

CountTable count_ngrams(std::span<const IdSentence> sentences, int order) {
  if (order < 1) throw Error(ErrorCode::kBadOrder, "order must be >= 1, got " + std::to_string(order));
  std::vector<std::vector<WordId>> keys(order);
  std::vector<std::vector<Count>> counts(order);
  std::vector<WordId> padded;
  for (const IdSentence &s : sentences) {
    padded.assign(order - 1, kBosId);
    padded.insert(padded.end(), s.begin(), s.end());
    padded.push_back(kEosId);
    for (std::size_t pos = order - 1; pos < padded.size(); ++pos) {
      if (padded[pos] == kBosId) continue;  // a literal <s> token is never an event
      for (int n = 1; n <= order; ++n) {
        keys[n - 1].insert(keys[n - 1].end(), padded.begin() + (pos + 1 - n), padded.begin() + (pos + 1));
        counts[n - 1].push_back(1);
      }
    }
  }
  return CountTable::from_unsorted(order, std::move(keys), std::move(counts), false);
}

CountTable merge_counts(const CountTable &a, const CountTable &b) {
  if (a.order() != b.order()) {
    throw Error(ErrorCode::kOrderMismatch,
                "cannot merge order " + std::to_string(a.order()) + " with order " + std::to_string(b.order()));
  }
  if (a.adjusted() || b.adjusted()) throw Error(ErrorCode::kAdjustedMerge, "only raw count tables can be merged");
  int order = a.order();
  std::vector<std::vector<WordId>> keys(order);
  std::vector<std::vector<Count>> counts(order);
  for (int n = 1; n <= order; ++n) {
    for (const CountTable *t : {&a, &b}) {
      const std::vector<WordId> &ids = t->keys(n).data();
      keys[n - 1].insert(keys[n - 1].end(), ids.begin(), ids.end());
      counts[n - 1].insert(counts[n - 1].end(), t->counts(n).begin(), t->counts(n).end());
    }
  }
  return CountTable::from_unsorted(order, std::move(keys), std::move(counts), false);
}

CountTable adjust_counts_kn(const CountTable &raw) {
  if (raw.adjusted()) throw Error(ErrorCode::kAlreadyAdjusted, "count table is already adjusted");
  int order = raw.order();
  std::vector<std::vector<WordId>> keys(order);
  std::vector<std::vector<Count>> counts(order);
  keys[order - 1] = raw.keys(order).data();
  counts[order - 1] = raw.counts(order);
  for (int n = 1; n < order; ++n) {
    // One continuation per distinct (n+1)-gram: its suffix gains a left extension.
    const NgramIndex &higher = raw.keys(n + 1);
    for (std::size_t i = 0; i < higher.size(); ++i) {
      std::span<const WordId> suffix = higher.key(i).subspan(1);
      if (suffix[0] == kBosId) continue;
      keys[n - 1].insert(keys[n - 1].end(), suffix.begin(), suffix.end());
      counts[n - 1].push_back(1);
    }
    const NgramIndex &same = raw.keys(n);
    for (std::size_t i = 0; i < same.size(); ++i) {
      std::span<const WordId> k = same.key(i);
      if (k[0] != kBosId) continue;
      keys[n - 1].insert(keys[n - 1].end(), k.begin(), k.end());
      counts[n - 1].push_back(raw.counts(n)[i]);
    }
  }
  return CountTable::from_unsorted(order, std::move(keys), std::move(counts), true);
}

std::vector<Count> count_of_counts(const CountTable &table, int n, int max_c) {
  std::vector<Count> coc(max_c + 1, 0);
  for (Count c : table.counts(n)) {
    if (c >= 1 && c <= static_cast<Count>(max_c)) ++coc[c];
  }
  return coc;
}

void write_counts(const CountTable &table, const Vocabulary &vocab, std::ostream &out) {
  // k-way merge of the per-order sorted arrays gives one global lexicographic order.
  int order = table.order();
  std::vector<std::size_t> pos(order, 0);
  for (;;) {
    int best = -1;
    for (int n = 1; n <= order; ++n) {
      if (pos[n - 1] >= table.size(n)) continue;
      if (best < 0 || key_less(table.keys(n).key(pos[n - 1]), table.keys(best).key(pos[best - 1]))) best = n;
    }
    if (best < 0) break;
    std::span<const WordId> k = table.keys(best).key(pos[best - 1]);
    for (std::size_t j = 0; j < k.size(); ++j) {
      if (j) out << ' ';
      out << vocab.word(k[j]);
    }
    out << '\t' << table.counts(best)[pos[best - 1]] << '\n';
    ++pos[best - 1];
  }
}

CountTable read_counts(std::istream &in, const Vocabulary &vocab, int order) {
  std::vector<std::vector<WordId>> keys;
  std::vector<std::vector<Count>> counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kParseError, "counts line " + std::to_string(line_no) + ": expected ngram<TAB>count");
    }
    Sentence words = split_words(std::string_view(line).substr(0, tab));
    if (words.empty()) throw Error(ErrorCode::kParseError, "counts line " + std::to_string(line_no) + ": empty n-gram");
    Count c = parse_count(std::string_view(line).substr(tab + 1), line_no);
    std::size_t n = words.size();
    if (order > 0 && static_cast<int>(n) > order) {
      throw Error(ErrorCode::kOrderMismatch, "counts line " + std::to_string(line_no) + ": n-gram longer than order");
    }
    if (keys.size() < n) {
      keys.resize(n);
      counts.resize(n);
    }
    for (const std::string &w : words) {
      auto id = vocab.find(w);
      if (!id) throw Error(ErrorCode::kParseError, "counts line " + std::to_string(line_no) + ": word '" + w + "' not in vocabulary");
      keys[n - 1].push_back(*id);
    }
    counts[n - 1].push_back(c);
  }
  int final_order = order > 0 ? order : static_cast<int>(keys.size());
  if (final_order < 1) throw Error(ErrorCode::kEmptyCorpus, "count file has no entries");
  keys.resize(final_order);
  counts.resize(final_order);
  return CountTable::from_unsorted(final_order, std::move(keys), std::move(counts), false);
}

void write_counts_file(const CountTable &table, const Vocabulary &vocab, const std::string &path) {
  std::ofstream out = open_output(path);
  write_counts(table, vocab, out);
  finish_output(out, path);
}

CountTable read_counts_file(const std::string &path, const Vocabulary &vocab, int order) {
  std::ifstream in = open_input(path);
  return read_counts(in, vocab, order);
}

}  // namespace lmkit
