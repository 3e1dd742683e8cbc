#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "vtmm/embedding.hpp"
#include "vtmm/features.hpp"
#include "vtmm/net.hpp"

namespace vtmm {

/// How the negative-weight group combines with the positive one.
/// Literal: s = s_p + s_n, exactly as the weighted-average formulas are written.
/// Subtractive: s = s_p - s_n, so counter-indicative features lower the score.
enum class ScoreMode { Literal, Subtractive };

enum class FeatureKind { LongSentence, CommonShort };

const char* to_string(ScoreMode mode);
ScoreMode parse_score_mode(std::string_view text);
const char* to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view text);

struct AnnotatedFeature {
  std::string text;
  double weight = 1.0;
  std::string class_label;
  FeatureKind kind = FeatureKind::LongSentence;

  friend bool operator==(const AnnotatedFeature&, const AnnotatedFeature&) = default;
};

/// Entry of the shared phrase catalog ("indoor", "standing", ...). Catalog
/// phrases are not scored by themselves; a class uses one by listing it as a
/// common-short feature.
struct CommonFeature {
  std::string text;
  double weight = 1.0;

  friend bool operator==(const CommonFeature&, const CommonFeature&) = default;
};

struct AnnotationSet {
  std::vector<CommonFeature> common_features;
  std::map<std::string, std::vector<AnnotatedFeature>> classes;

  /// One message per offending feature; empty when valid.
  std::vector<std::string> validate() const;
  std::size_t feature_count() const;

  nlohmann::json to_json() const;
  /// Throws ValidationFailed on schema errors (not on content errors).
  static AnnotationSet from_json(const nlohmann::json& doc);
  static AnnotationSet load(const std::filesystem::path& path);

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

struct FeatureDegree {
  AnnotatedFeature feature;
  double degree = 0.0;
};

struct ClassScoreBreakdown {
  std::string class_label;
  double s_p = 0.0;
  double s_n = 0.0;
  double s = 0.0;
  std::vector<FeatureDegree> per_feature;
};

/// Weighted mean of degrees over the positive-weight features (s_p) and over
/// the negative-weight features (s_n); an empty group contributes 0.
/// Throws NoFeatures for an empty list, DimensionMismatch if misaligned.
ClassScoreBreakdown class_score(std::span<const AnnotatedFeature> features, std::span<const double> degrees,
                                ScoreMode mode);

struct RankedClass {
  std::string class_label;
  double s = 0.0;

  friend bool operator==(const RankedClass&, const RankedClass&) = default;
};

/// Descending by s, ties by class label.
std::vector<RankedClass> rank(std::span<const ClassScoreBreakdown> breakdowns);
void sort_ranked(std::vector<ClassScoreBreakdown>& breakdowns);

/// Computes matching degrees against a fixed network, caching projected texts
/// and projected videos. Safe to share between threads. Video projections are
/// cached by video id, so ids must be unique for the scorer's lifetime.
class FeatureScorer {
 public:
  FeatureScorer(const MatchingNetwork& net, const SentenceEmbedder& embedder) : net_(net), embedder_(embedder) {}

  /// Embeds and projects every text of `annotations` not cached yet.
  void prepare(const AnnotationSet& annotations);
  /// Drops cached texts that `annotations` no longer uses.
  void retain_only(const AnnotationSet& annotations);

  double degree(const VideoFeature& video, const std::string& text);

  /// One breakdown per annotated class, ranked.
  std::vector<ClassScoreBreakdown> score(const VideoFeature& video, const AnnotationSet& annotations, ScoreMode mode);

  std::size_t cached_texts() const;

 private:
  const Vector& text_projection(const std::string& text);
  const Vector& video_projection(const VideoFeature& video);

  const MatchingNetwork& net_;
  const SentenceEmbedder& embedder_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Vector> texts_;
  std::unordered_map<std::string, Vector> videos_;
};

/// Ranks all annotated classes for one video. Every class needs a feature.
std::vector<RankedClass> classify_standalone(const VideoFeature& video, const AnnotationSet& annotations,
                                             const MatchingNetwork& net, const SentenceEmbedder& embedder,
                                             ScoreMode mode);

struct CorrectionResult {
  std::string class_label;
  double s_origin = 0.0;
  double s_vtmm = 0.0;
  double lambda = 1.0;
  double s_final = 0.0;
};

inline constexpr double kDefaultLambda = 1.0;

/// S_final = S_origin + lambda * S_VTMM per baseline class; classes without a
/// VTMM score get 0. Throws UnknownClassInVTMM for VTMM classes outside the
/// baseline.
std::map<std::string, CorrectionResult> correct(const std::map<std::string, double>& baseline,
                                                const std::map<std::string, double>& vtmm, double lambda);

/// Highest score, ties by label. Throws InvalidArgument when empty.
std::string argmax(const std::map<std::string, double>& scores);
std::string argmax(const std::map<std::string, CorrectionResult>& results);

/// Per-video softmax of raw baseline scores.
std::map<std::string, double> softmax(const std::map<std::string, double>& scores);

struct Prediction {
  std::string video_id;
  std::string predicted;
  std::string truth;
};

struct Evaluation {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::string> classes;                 // sorted; rows and columns of `confusion`
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::map<std::string, double> per_class_accuracy; // classes with at least one true video

  std::size_t count(const std::string& truth, const std::string& predicted) const;
  nlohmann::json to_json() const;
};

/// `extra_classes` are added to the confusion axes even when unseen.
Evaluation evaluate(std::span<const Prediction> predictions, std::span<const std::string> extra_classes = {});

}  // namespace vtmm
