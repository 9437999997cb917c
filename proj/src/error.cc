#include "lmkit/error.hh"

namespace lmkit {

const char *error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadArgument: return "BadArgument";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kBadOrder: return "BadOrder";
    case ErrorCode::kOrderMismatch: return "OrderMismatch";
    case ErrorCode::kAdjustedMerge: return "AdjustedMerge";
    case ErrorCode::kAlreadyAdjusted: return "AlreadyAdjusted";
    case ErrorCode::kDegenerateDiscounts: return "DegenerateDiscounts";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingSection: return "MissingSection";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kVocabMismatch: return "VocabMismatch";
    case ErrorCode::kBadWeights: return "BadWeights";
    case ErrorCode::kEmptyHeldout: return "EmptyHeldout";
    case ErrorCode::kTargetTooSmall: return "TargetTooSmall";
    case ErrorCode::kZeroProbability: return "ZeroProbability";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kUnreachableNode: return "UnreachableNode";
    case ErrorCode::kEmptyLattice: return "EmptyLattice";
    case ErrorCode::kEmptyTuneSet: return "EmptyTuneSet";
    case ErrorCode::kLabelMismatch: return "LabelMismatch";
    case ErrorCode::kShardUnavailable: return "ShardUnavailable";
    case ErrorCode::kBindFailure: return "BindFailure";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

}  // namespace lmkit
