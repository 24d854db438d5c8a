#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cascadecl {

enum class ErrorCode {
  OrphanRetweet,
  MixedNews,
  UnknownUser,
  DimensionMismatch,
  EmptyResult,
  NegativeOffset,
  MissingTimeline,
  ShapeMismatch,
  NonFiniteInput,
  DisconnectedLoss,
  LengthMismatch,
  EmptyGraph,
  SizeExceedsDataset,
  EmptySamples,
  ArchitectureMismatch,
  TooSmall,
  EmptyInput,
  DegenerateRegime,
  ParseError,
  IncompatibleCheckpoint,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cascadecl
