#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vtmm {

enum class Errc {
  EmptyText,
  MissingPrecomputedEntry,
  UnresolvableLabel,
  HierarchyCycle,
  EmptyFrameList,
  TooFewObjects,
  DimensionMismatch,
  StaleCache,
  EmptyTrainingSet,
  CorruptCheckpoint,
  VersionMismatch,
  SingleClassDataset,
  NoFeatures,
  UnknownClassInVTMM,
  EmptyEvaluation,
  CorruptProject,
  ValidationFailed,
  UnknownRevision,
  UnknownVideo,
  UnknownClass,
  WriteConflict,
  InvalidArgument,
  Io,
};

// Coarse grouping used for CLI exit codes and HTTP status mapping.
enum class ErrorCategory { Validation, Io, Contract, NotFound, Conflict };

const char* to_string(Errc code) noexcept;
ErrorCategory category(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::vector<std::string> diagnostics = {})
      : std::runtime_error(message), code_(code), diagnostics_(std::move(diagnostics)) {}

  Errc code() const noexcept { return code_; }
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  Errc code_;
  std::vector<std::string> diagnostics_;
};

}  // namespace vtmm
