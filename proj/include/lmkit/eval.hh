#ifndef LMKIT_EVAL_HH
#define LMKIT_EVAL_HH

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lmkit/model.hh"

namespace lmkit {

struct SentenceScore {
  std::size_t tokens = 0;
  double log_prob = 0;  // natural log
  std::size_t oov = 0;
};

struct EvalReport {
  std::size_t token_count = 0;
  double total_log_prob = 0;  // natural log
  double ppl = 0;
  std::size_t oov_count = 0;
  std::vector<SentenceScore> sentences;
};

// PPL = exp(-total_log_prob / token_count).  <unk> tokens are scored like
// any other word and also reported in oov_count.  </s> is predicted and
// counted when count_end_symbol is set.
EvalReport perplexity(const LanguageModel &model, std::span<const IdSentence> test, bool count_end_symbol = true);

struct WerReport {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_length = 0;
  double wer = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
};

// Minimal unit-cost alignment.  Among minimal alignments the one with the
// most substitutions (fewest insertion+deletion pairs) is reported, which
// fixes S, D and I uniquely.  Words compare case-sensitively.
WerReport word_error_rate(std::span<const std::string> hyp, std::span<const std::string> ref);

struct HypRef {
  std::vector<std::string> hyp;
  std::vector<std::string> ref;
};

// Sums S, D, I and reference lengths over independently aligned pairs.
WerReport corpus_wer(std::span<const HypRef> pairs);

}  // namespace lmkit

#endif  // LMKIT_EVAL_HH
