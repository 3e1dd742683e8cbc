#include "vtmm/error.hpp"

namespace vtmm {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyText: return "EmptyText";
    case Errc::MissingPrecomputedEntry: return "MissingPrecomputedEntry";
    case Errc::UnresolvableLabel: return "UnresolvableLabel";
    case Errc::HierarchyCycle: return "HierarchyCycle";
    case Errc::EmptyFrameList: return "EmptyFrameList";
    case Errc::TooFewObjects: return "TooFewObjects";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::StaleCache: return "StaleCache";
    case Errc::EmptyTrainingSet: return "EmptyTrainingSet";
    case Errc::CorruptCheckpoint: return "CorruptCheckpoint";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::SingleClassDataset: return "SingleClassDataset";
    case Errc::NoFeatures: return "NoFeatures";
    case Errc::UnknownClassInVTMM: return "UnknownClassInVTMM";
    case Errc::EmptyEvaluation: return "EmptyEvaluation";
    case Errc::CorruptProject: return "CorruptProject";
    case Errc::ValidationFailed: return "ValidationFailed";
    case Errc::UnknownRevision: return "UnknownRevision";
    case Errc::UnknownVideo: return "UnknownVideo";
    case Errc::UnknownClass: return "UnknownClass";
    case Errc::WriteConflict: return "WriteConflict";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

ErrorCategory category(Errc code) noexcept {
  switch (code) {
    case Errc::Io:
      return ErrorCategory::Io;
    case Errc::UnknownRevision:
    case Errc::UnknownVideo:
    case Errc::UnknownClass:
      return ErrorCategory::NotFound;
    case Errc::WriteConflict:
      return ErrorCategory::Conflict;
    case Errc::EmptyText:
    case Errc::EmptyFrameList:
    case Errc::TooFewObjects:
    case Errc::NoFeatures:
    case Errc::EmptyEvaluation:
    case Errc::EmptyTrainingSet:
    case Errc::SingleClassDataset:
    case Errc::ValidationFailed:
    case Errc::InvalidArgument:
    case Errc::DimensionMismatch:
    case Errc::MissingPrecomputedEntry:
    case Errc::UnresolvableLabel:
    case Errc::HierarchyCycle:
    case Errc::UnknownClassInVTMM:
      return ErrorCategory::Validation;
    case Errc::StaleCache:
    case Errc::CorruptCheckpoint:
    case Errc::VersionMismatch:
    case Errc::CorruptProject:
      return ErrorCategory::Contract;
  }
  return ErrorCategory::Contract;
}

}  // namespace vtmm
