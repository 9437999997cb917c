#ifndef LMKIT_ARPA_HH
#define LMKIT_ARPA_HH

#include <iosfwd>
#include <string>

#include "lmkit/model.hh"

namespace lmkit {

// Canonical ARPA text: `\data\` with `ngram k=COUNT` lines, one `\k-grams:`
// section per order with `logprob<TAB>w1 ... wk<TAB>logbackoff` lines sorted by
// id sequence (no backoff column at the highest order), then `\end\`.  Values
// are printed with 7 significant digits.
void write_arpa(const BackoffModel &model, std::ostream &out);
void write_arpa_file(const BackoffModel &model, const std::string &path);

// The vocabulary is taken from the unigram section: <s>, </s>, <unk> get ids
// 0..2 and the other words follow in file order.  Errors carry line numbers.
BackoffModel read_arpa(std::istream &in);
BackoffModel read_arpa_file(const std::string &path);

}  // namespace lmkit

#endif  // LMKIT_ARPA_HH
