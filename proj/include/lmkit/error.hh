#ifndef LMKIT_ERROR_HH
#define LMKIT_ERROR_HH

#include <stdexcept>
#include <string>

namespace lmkit {

enum class ErrorCode {
  kBadArgument,
  kEmptyCorpus,
  kBadOrder,
  kOrderMismatch,
  kAdjustedMerge,
  kAlreadyAdjusted,
  kDegenerateDiscounts,
  kParseError,
  kMissingSection,
  kCountMismatch,
  kVocabMismatch,
  kBadWeights,
  kEmptyHeldout,
  kTargetTooSmall,
  kZeroProbability,
  kEmptyReference,
  kCycleDetected,
  kUnreachableNode,
  kEmptyLattice,
  kEmptyTuneSet,
  kLabelMismatch,
  kShardUnavailable,
  kBindFailure,
  kIoError,
};

const char *error_name(ErrorCode code);

// Every failure the library reports is an Error carrying one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lmkit

#endif  // LMKIT_ERROR_HH
