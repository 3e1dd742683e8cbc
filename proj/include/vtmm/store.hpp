#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vtmm/report.hpp"
#include "vtmm/scoring.hpp"

namespace vtmm {

using RevisionId = std::int64_t;

struct ProjectConfig {
  std::string dataset;     // dataset root, relative to the project or absolute
  std::string checkpoint;  // checkpoint file
  std::string embeddings;  // sentence-vector JSON, or "stub"
  ScoreMode mode = ScoreMode::Literal;
  double lambda = kDefaultLambda;
  BaselineNormalization normalization = BaselineNormalization::None;
  std::uint64_t seed = 0;
  std::size_t top_k = 3;

  nlohmann::json to_json() const;
  static ProjectConfig from_json(const nlohmann::json& doc);
};

struct AnnotationRevision {
  RevisionId id = 0;
  std::optional<RevisionId> parent;
  std::string timestamp;  // UTC, ISO-8601
  std::string note;
  AnnotationSet snapshot;
};

struct WeightChange {
  std::string text;
  FeatureKind kind = FeatureKind::LongSentence;
  double before = 0.0;
  double after = 0.0;
};

struct ClassDiff {
  std::string class_label;
  std::vector<AnnotatedFeature> added;
  std::vector<AnnotatedFeature> removed;
  std::vector<WeightChange> weight_changes;
};

nlohmann::json diff_to_json(const std::vector<ClassDiff>& diff);

/// Per-class symmetric difference keyed by (text, kind); a key present on
/// both sides with a different weight is a weight change.
std::vector<ClassDiff> diff_annotations(const AnnotationSet& from, const AnnotationSet& to);

/// project.json plus revisions/NNNN.json, one full snapshot per revision.
/// Revisions are append-only. Commits hold an advisory lock on
/// <root>/.lock so only one writer can append at a time.
class Project {
 public:
  /// Loads the project at `root`, or creates one holding revision 0 (empty
  /// annotations). Throws CorruptProject on unreadable state.
  static Project open_or_init(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const ProjectConfig& config() const { return config_; }
  void set_config(ProjectConfig config);

  RevisionId active_revision() const { return active_; }
  const AnnotationRevision& active() const { return revision(active_); }
  /// Throws UnknownRevision.
  const AnnotationRevision& revision(RevisionId id) const;
  const std::vector<AnnotationRevision>& revisions() const { return revisions_; }

  /// Appends a validated snapshot and makes it active. With `expected_base`,
  /// throws WriteConflict when the on-disk active revision differs from it.
  /// Throws ValidationFailed with one diagnostic per bad feature.
  RevisionId commit_annotations(const AnnotationSet& snapshot, const std::string& note,
                                std::optional<RevisionId> expected_base = std::nullopt);

  std::vector<ClassDiff> diff(RevisionId a, RevisionId b) const;

  /// Resolves a config path against the project root.
  std::filesystem::path resolve(const std::string& path) const;

 private:
  void load();
  void save_manifest() const;
  std::filesystem::path revision_path(RevisionId id) const;
  void write_revision(const AnnotationRevision& rev) const;

  std::filesystem::path root_;
  ProjectConfig config_;
  std::vector<AnnotationRevision> revisions_;
  RevisionId active_ = 0;
};

}  // namespace vtmm
