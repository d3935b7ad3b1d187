#include "varexp/error.hpp"

namespace varexp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RepositoryNotFound: return "RepositoryNotFound";
    case ErrorCode::BranchNotFound: return "BranchNotFound";
    case ErrorCode::CorruptObject: return "CorruptObject";
    case ErrorCode::CommitNotFound: return "CommitNotFound";
    case ErrorCode::PathAbsentAtCommit: return "PathAbsentAtCommit";
    case ErrorCode::EmptyIdentity: return "EmptyIdentity";
    case ErrorCode::GitFailure: return "GitFailure";
    case ErrorCode::SnapshotUnavailable: return "SnapshotUnavailable";
    case ErrorCode::InconsistentStreams: return "InconsistentStreams";
    case ErrorCode::UnknownPath: return "UnknownPath";
    case ErrorCode::EmptyProject: return "EmptyProject";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::SampleSizeOutOfRange: return "SampleSizeOutOfRange";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateX: return "DegenerateX";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace varexp
