#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace suscept {

enum class ErrorCode {
  // embedding_store
  BadMagic,
  DuplicateId,
  TruncatedRecord,
  DimMismatch,
  NoProfilePosts,
  MissingEmbedding,
  IoFailure,
  // corpus
  ParseError,
  DanglingReference,
  UnknownPost,
  EmptyResult,
  BadRatios,
  NoCandidates,
  // model
  BadArchitecture,
  BadCheckpoint,
  VersionMismatch,
  EmptyInput,
  // training
  EmptySplit,
  NonFiniteLoss,
  // evaluation
  NoScorablePosts,
  ZeroVector,
  DegenerateGroup,
  // analysis
  UnknownFactor,
  LengthMismatch,
  ConstantInput,
  // synth / cli
  BadConfig,
};

std::string_view to_string(ErrorCode code);

/// Domain error carrying a machine-checkable code. Everything the library
/// throws on bad input is one of these.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace suscept
