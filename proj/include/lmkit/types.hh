#ifndef LMKIT_TYPES_HH
#define LMKIT_TYPES_HH

#include <cstdint>
#include <string>
#include <vector>

namespace lmkit {

typedef uint32_t WordId;
typedef uint64_t Count;

typedef std::vector<std::string> Sentence;
typedef std::vector<WordId> IdSentence;

// ARPA surrogate for log10(0).
constexpr double kLogZero = -99.0;

}  // namespace lmkit

#endif  // LMKIT_TYPES_HH
