#pragma once

#include <cstdint>
#include <span>

#include <json.hpp>

#include "vtmm/dataset.hpp"
#include "vtmm/scoring.hpp"

namespace vtmm {

struct ReportOptions {
  ScoreMode mode = ScoreMode::Literal;
  std::size_t top_k = 3;
  std::int64_t revision = 0;
};

enum class BaselineNormalization { None, Softmax };

const char* to_string(BaselineNormalization n);
BaselineNormalization parse_normalization(std::string_view text);

/// Standalone classification of every labeled video, with per-video top-k
/// breakdowns and per-feature degrees. Videos are scored in parallel; the
/// output does not depend on the thread count.
nlohmann::json evaluation_report(FeatureScorer& scorer, std::span<const VideoFeature* const> videos,
                                 const AnnotationSet& annotations, const ReportOptions& options);

/// Baseline-only and corrected evaluations side by side. VTMM class scores
/// come from the annotated classes; the rest receive 0.
nlohmann::json correction_report(FeatureScorer& scorer, std::span<const VideoFeature* const> videos,
                                 const AnnotationSet& annotations, const BaselineScores& baseline, double lambda,
                                 BaselineNormalization normalization, const ReportOptions& options);

/// Fixed-width table of a report's evaluation block, for humans.
std::string render_evaluation_text(const nlohmann::json& evaluation);

}  // namespace vtmm
