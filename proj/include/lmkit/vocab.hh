#ifndef LMKIT_VOCAB_HH
#define LMKIT_VOCAB_HH

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmkit/types.hh"

namespace lmkit {

constexpr WordId kBosId = 0;
constexpr WordId kEosId = 1;
constexpr WordId kUnkId = 2;
constexpr std::size_t kReservedCount = 3;

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

inline bool is_boundary(std::string_view token) { return token == kBos || token == kEos; }
inline bool is_reserved(std::string_view token) { return is_boundary(token) || token == kUnk; }

// Closed word set with dense ids.  Ids 0..2 are always <s>, </s>, <unk>.
// Immutable once built; safe to share across threads.
class Vocabulary {
 public:
  // Reserved symbols only.
  Vocabulary();

  // Words in id order.  The first three entries must be the reserved symbols
  // in their fixed order; duplicates are rejected.
  static Vocabulary from_words(std::vector<std::string> words, std::vector<Count> counts = {});

  std::size_t size() const { return words_.size(); }

  const std::string &word(WordId id) const { return words_.at(id); }
  Count count(WordId id) const { return counts_.at(id); }
  const std::vector<std::string> &words() const { return words_; }

  std::optional<WordId> find(std::string_view word) const;
  // Unknown words map to kUnkId.
  WordId id(std::string_view word) const;
  bool contains(WordId id) const { return id < words_.size(); }

  bool operator==(const Vocabulary &other) const { return words_ == other.words_; }

 private:
  struct Uninitialized {};
  explicit Vocabulary(Uninitialized) {}

  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>()(s); }
  };

  std::vector<std::string> words_;
  std::vector<Count> counts_;
  std::unordered_map<std::string, WordId, StringHash, std::equal_to<>> id_of_;
};

// Reserved symbols plus the most frequent words with count >= min_count,
// truncated so that the total size (reserved included) is at most max_size.
// Frequency ties go to the lexicographically smaller word.
Vocabulary build_vocab(std::span<const Sentence> sentences, std::optional<std::size_t> max_size,
                       Count min_count);

IdSentence map_tokens(const Vocabulary &vocab, std::span<const std::string> tokens);
std::vector<IdSentence> map_corpus(const Vocabulary &vocab, std::span<const Sentence> sentences);

// Fraction of tokens mapped to <unk>; boundary symbols are excluded from both counts.
double oov_rate(const Vocabulary &vocab, std::span<const Sentence> sentences);

// One `word<TAB>count` line per word, in id order.
void write_vocab(const Vocabulary &vocab, std::ostream &out);
Vocabulary read_vocab(std::istream &in);
void write_vocab_file(const Vocabulary &vocab, const std::string &path);
Vocabulary read_vocab_file(const std::string &path);

// Whitespace tokenization, one sentence per line.  Blank lines are skipped.
std::vector<Sentence> read_sentences(std::istream &in);
std::vector<Sentence> read_sentences_file(const std::string &path);
Sentence split_words(std::string_view line);

}  // namespace lmkit

#endif  // LMKIT_VOCAB_HH
