#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace varexp {

enum class ErrorCode {
  RepositoryNotFound,
  BranchNotFound,
  CorruptObject,
  CommitNotFound,
  PathAbsentAtCommit,
  EmptyIdentity,
  GitFailure,
  SnapshotUnavailable,
  InconsistentStreams,
  UnknownPath,
  EmptyProject,
  AllZero,
  TooFewSamples,
  SampleSizeOutOfRange,
  DegenerateSample,
  LengthMismatch,
  DegenerateX,
  EmptyCorpus,
  InvalidConfig,
  IoFailure,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the toolkit carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace varexp
