#include "cascadecl/error.hpp"

namespace cascadecl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OrphanRetweet: return "OrphanRetweet";
    case ErrorCode::MixedNews: return "MixedNews";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::NegativeOffset: return "NegativeOffset";
    case ErrorCode::MissingTimeline: return "MissingTimeline";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DisconnectedLoss: return "DisconnectedLoss";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::SizeExceedsDataset: return "SizeExceedsDataset";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::ArchitectureMismatch: return "ArchitectureMismatch";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateRegime: return "DegenerateRegime";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IncompatibleCheckpoint: return "IncompatibleCheckpoint";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace cascadecl
