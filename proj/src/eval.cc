#include "lmkit/eval.hh"

#include <algorithm>
#include <cmath>
#include <utility>

#include "lmkit/error.hh"

namespace lmkit {

EvalReport perplexity(const LanguageModel &model, std::span<const IdSentence> test, bool count_end_symbol) {
  EvalReport report;
  const double ln10 = std::log(10.0);
  std::vector<WordId> history;
  for (const IdSentence &s : test) {
    SentenceScore score;
    history.assign(std::max(model.order() - 1, 0), kBosId);
    std::size_t events = s.size() + (count_end_symbol ? 1 : 0);
    for (std::size_t t = 0; t < events; ++t) {
      WordId w = t < s.size() ? s[t] : kEosId;
      double lp = model.log10_prob(history, w);
      if (!(lp > kLogZero) || !std::isfinite(lp)) {
        throw Error(ErrorCode::kZeroProbability, "model assigns zero probability to word id " + std::to_string(w));
      }
      score.log_prob += lp * ln10;
      ++score.tokens;
      if (w == kUnkId) ++score.oov;
      history.push_back(w);
    }
    report.token_count += score.tokens;
    report.total_log_prob += score.log_prob;
    report.oov_count += score.oov;
    report.sentences.push_back(score);
  }
  if (report.token_count == 0) throw Error(ErrorCode::kEmptyCorpus, "no tokens to evaluate");
  report.ppl = std::exp(-report.total_log_prob / static_cast<double>(report.token_count));
  return report;
}

WerReport word_error_rate(std::span<const std::string> hyp, std::span<const std::string> ref) {
  if (ref.empty()) throw Error(ErrorCode::kEmptyReference, "reference transcript is empty");
  const std::size_t h = hyp.size(), r = ref.size();
  // Cost is (edits, insertions + deletions), compared lexicographically.
  typedef std::pair<std::size_t, std::size_t> Cost;
  std::vector<Cost> dp((r + 1) * (h + 1));
  auto at = [h](std::size_t i, std::size_t j) { return i * (h + 1) + j; };
  for (std::size_t i = 0; i <= r; ++i) dp[at(i, 0)] = {i, i};
  for (std::size_t j = 0; j <= h; ++j) dp[at(0, j)] = {j, j};
  for (std::size_t i = 1; i <= r; ++i) {
    for (std::size_t j = 1; j <= h; ++j) {
      Cost diag = dp[at(i - 1, j - 1)];
      if (ref[i - 1] != hyp[j - 1]) ++diag.first;
      Cost del = dp[at(i - 1, j)];
      ++del.first;
      ++del.second;
      Cost ins = dp[at(i, j - 1)];
      ++ins.first;
      ++ins.second;
      dp[at(i, j)] = std::min({diag, del, ins});
    }
  }
  WerReport report;
  report.ref_length = r;
  const Cost total = dp[at(r, h)];
  // D - I = r - h, D + I = total.second.
  report.deletions = (total.second + r - h) / 2;
  report.insertions = total.second - report.deletions;
  report.substitutions = total.first - total.second;
  report.wer = static_cast<double>(report.errors()) / static_cast<double>(r);
  return report;
}

WerReport corpus_wer(std::span<const HypRef> pairs) {
  WerReport total;
  for (const HypRef &p : pairs) {
    WerReport one = word_error_rate(p.hyp, p.ref);
    total.substitutions += one.substitutions;
    total.deletions += one.deletions;
    total.insertions += one.insertions;
    total.ref_length += one.ref_length;
  }
  if (total.ref_length == 0) throw Error(ErrorCode::kEmptyReference, "no reference words");
  total.wer = static_cast<double>(total.errors()) / static_cast<double>(total.ref_length);
  return total;
}

}  // namespace lmkit
