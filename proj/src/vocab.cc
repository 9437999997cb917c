#include "lmkit/vocab.hh"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lmkit/error.hh"
#include "lmkit/io.hh"

namespace lmkit {

Vocabulary::Vocabulary() : Vocabulary(from_words({std::string(kBos), std::string(kEos), std::string(kUnk)})) {}

Vocabulary Vocabulary::from_words(std::vector<std::string> words, std::vector<Count> counts) {
  if (words.size() < kReservedCount || words[kBosId] != kBos || words[kEosId] != kEos ||
      words[kUnkId] != kUnk) {
    throw Error(ErrorCode::kBadArgument, "vocabulary must start with <s>, </s>, <unk>");
  }
  if (counts.empty()) counts.assign(words.size(), 0);
  if (counts.size() != words.size()) {
    throw Error(ErrorCode::kBadArgument, "vocabulary counts do not match word list");
  }
  Vocabulary v{Uninitialized{}};
  v.words_ = std::move(words);
  v.counts_ = std::move(counts);
  v.id_of_.reserve(v.words_.size());
  for (WordId i = 0; i < v.words_.size(); ++i) {
    if (!v.id_of_.emplace(v.words_[i], i).second) {
      throw Error(ErrorCode::kBadArgument, "duplicate vocabulary word '" + v.words_[i] + "'");
    }
  }
  return v;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = id_of_.find(word);
  if (it == id_of_.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::id(std::string_view word) const {
  auto it = id_of_.find(word);
  return it == id_of_.end() ? kUnkId : it->second;
}

Vocabulary build_vocab(std::span<const Sentence> sentences, std::optional<std::size_t> max_size,
                       Count min_count) {
  if (max_size && *max_size < kReservedCount) {
    throw Error(ErrorCode::kBadArgument, "max vocabulary size must cover the 3 reserved symbols");
  }
  if (min_count < 1) throw Error(ErrorCode::kBadArgument, "min_count must be >= 1");

  std::unordered_map<std::string, Count> freq;
  Count tokens = 0;
  for (const Sentence &s : sentences) {
    for (const std::string &t : s) {
      ++tokens;
      if (!is_reserved(t)) ++freq[t];
    }
  }
  if (tokens == 0) throw Error(ErrorCode::kEmptyCorpus, "no tokens to build a vocabulary from");

  std::vector<std::pair<std::string, Count>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::size_t keep = ranked.size();
  if (max_size) keep = std::min(keep, *max_size - kReservedCount);

  std::vector<std::string> words = {std::string(kBos), std::string(kEos), std::string(kUnk)};
  Count sentence_count = sentences.size();
  std::vector<Count> counts = {sentence_count, sentence_count, 0};
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i < keep && ranked[i].second >= min_count) {
      words.push_back(ranked[i].first);
      counts.push_back(ranked[i].second);
    } else {
      counts[kUnkId] += ranked[i].second;
    }
  }
  return Vocabulary::from_words(std::move(words), std::move(counts));
}

IdSentence map_tokens(const Vocabulary &vocab, std::span<const std::string> tokens) {
  IdSentence ids;
  ids.reserve(tokens.size());
  for (const std::string &t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

std::vector<IdSentence> map_corpus(const Vocabulary &vocab, std::span<const Sentence> sentences) {
  std::vector<IdSentence> out;
  out.reserve(sentences.size());
  for (const Sentence &s : sentences) out.push_back(map_tokens(vocab, s));
  return out;
}

double oov_rate(const Vocabulary &vocab, std::span<const Sentence> sentences) {
  Count tokens = 0, oov = 0;
  for (const Sentence &s : sentences) {
    for (const std::string &t : s) {
      if (is_boundary(t)) continue;
      ++tokens;
      if (vocab.id(t) == kUnkId) ++oov;
    }
  }
  if (tokens == 0) throw Error(ErrorCode::kEmptyCorpus, "no tokens to measure OOV rate on");
  return static_cast<double>(oov) / static_cast<double>(tokens);
}

void write_vocab(const Vocabulary &vocab, std::ostream &out) {
  for (WordId i = 0; i < vocab.size(); ++i) out << vocab.word(i) << '\t' << vocab.count(i) << '\n';
}

Vocabulary read_vocab(std::istream &in) {
  std::vector<std::string> words;
  std::vector<Count> counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorCode::kParseError, "vocabulary line " + std::to_string(line_no) + ": expected word<TAB>count");
    }
    words.push_back(line.substr(0, tab));
    counts.push_back(parse_count(std::string_view(line).substr(tab + 1), line_no));
  }
  return Vocabulary::from_words(std::move(words), std::move(counts));
}

void write_vocab_file(const Vocabulary &vocab, const std::string &path) {
  std::ofstream out = open_output(path);
  write_vocab(vocab, out);
  finish_output(out, path);
}

Vocabulary read_vocab_file(const std::string &path) {
  std::ifstream in = open_input(path);
  return read_vocab(in);
}

Sentence split_words(std::string_view line) {
  Sentence words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) words.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return words;
}

std::vector<Sentence> read_sentences(std::istream &in) {
  std::vector<Sentence> out;
  std::string line;
  while (std::getline(in, line)) {
    Sentence s = split_words(line);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> read_sentences_file(const std::string &path) {
  std::ifstream in = open_input(path);
  return read_sentences(in);
}

}  // namespace lmkit
