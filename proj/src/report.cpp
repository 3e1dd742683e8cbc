#include "vtmm/report.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <set>
#include <sstream>

#include "vtmm/error.hpp"

namespace vtmm {

const char* to_string(BaselineNormalization n) { return n == BaselineNormalization::None ? "none" : "softmax"; }

BaselineNormalization parse_normalization(std::string_view text) {
  if (text == "none" || text == "raw") return BaselineNormalization::None;
  if (text == "softmax") return BaselineNormalization::Softmax;
  throw Error(Errc::InvalidArgument, "unknown baseline normalization '" + std::string(text) + "'");
}

namespace {

std::vector<const VideoFeature*> labeled(std::span<const VideoFeature* const> videos) {
  std::vector<const VideoFeature*> out;
  for (const VideoFeature* v : videos) {
    if (v->class_label()) out.push_back(v);
  }
  return out;
}

nlohmann::json breakdown_json(const ClassScoreBreakdown& b) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& fd : b.per_feature) {
    features.push_back({{"text", fd.feature.text},
                        {"weight", fd.feature.weight},
                        {"kind", to_string(fd.feature.kind)},
                        {"degree", fd.degree}});
  }
  return {{"class_label", b.class_label}, {"s", b.s}, {"s_p", b.s_p}, {"s_n", b.s_n}, {"features", features}};
}

// Scores every video in parallel into fixed slots. Exceptions are carried out
// of the parallel region and rethrown for the lowest failing index.
std::vector<std::vector<ClassScoreBreakdown>> score_all(FeatureScorer& scorer,
                                                        std::span<const VideoFeature* const> videos,
                                                        const AnnotationSet& annotations, ScoreMode mode) {
  scorer.prepare(annotations);
  std::vector<std::vector<ClassScoreBreakdown>> results(videos.size());
  std::vector<std::exception_ptr> errors(videos.size());
  const auto n = static_cast<std::int64_t>(videos.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      results[i] = scorer.score(*videos[i], annotations, mode);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace

nlohmann::json evaluation_report(FeatureScorer& scorer, std::span<const VideoFeature* const> videos,
                                 const AnnotationSet& annotations, const ReportOptions& options) {
  const auto targets = labeled(videos);
  if (targets.empty()) throw Error(Errc::EmptyEvaluation, "no labeled videos to evaluate");
  const auto scored = score_all(scorer, targets, annotations, options.mode);

  std::vector<Prediction> predictions;
  nlohmann::json per_video = nlohmann::json::array();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& ranked = scored[i];
    const std::string& truth = *targets[i]->class_label();
    predictions.push_back({targets[i]->video_id(), ranked.front().class_label, truth});
    nlohmann::json top = nlohmann::json::array();
    for (std::size_t k = 0; k < std::min(options.top_k, ranked.size()); ++k) top.push_back(breakdown_json(ranked[k]));
    per_video.push_back({{"video_id", targets[i]->video_id()},
                         {"truth", truth},
                         {"predicted", ranked.front().class_label},
                         {"correct", truth == ranked.front().class_label},
                         {"top", std::move(top)}});
  }
  std::vector<std::string> annotated;
  for (const auto& [label, f] : annotations.classes) annotated.push_back(label);
  const Evaluation ev = evaluate(predictions, annotated);

  nlohmann::json report = {{"revision", options.revision}, {"mode", to_string(options.mode)}};
  report["evaluation"] = ev.to_json();
  report["videos"] = std::move(per_video);
  return report;
}

nlohmann::json correction_report(FeatureScorer& scorer, std::span<const VideoFeature* const> videos,
                                 const AnnotationSet& annotations, const BaselineScores& baseline, double lambda,
                                 BaselineNormalization normalization, const ReportOptions& options) {
  const auto targets = labeled(videos);
  if (targets.empty()) throw Error(Errc::EmptyEvaluation, "no labeled videos to evaluate");
  for (const VideoFeature* v : targets) {
    if (!baseline.contains(v->video_id())) {
      throw Error(Errc::InvalidArgument, "baseline has no scores for video '" + v->video_id() + "'");
    }
  }
  // Classes without annotations are simply absent from the VTMM side.
  const auto scored = annotations.classes.empty()
                          ? std::vector<std::vector<ClassScoreBreakdown>>(targets.size())
                          : score_all(scorer, targets, annotations, options.mode);

  std::vector<Prediction> before, after;
  std::set<std::string> axis;
  nlohmann::json per_video = nlohmann::json::array();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const VideoFeature& v = *targets[i];
    std::map<std::string, double> origin = baseline.at(v.video_id());
    if (origin.empty()) throw Error(Errc::InvalidArgument, "baseline scores for '" + v.video_id() + "' are empty");
    if (normalization == BaselineNormalization::Softmax) origin = softmax(origin);
    std::map<std::string, double> vtmm;
    for (const auto& b : scored[i]) vtmm[b.class_label] = b.s;
    const auto results = correct(origin, vtmm, lambda);

    const std::string& truth = *v.class_label();
    const std::string base_pred = argmax(origin);
    const std::string final_pred = argmax(results);
    before.push_back({v.video_id(), base_pred, truth});
    after.push_back({v.video_id(), final_pred, truth});
    nlohmann::json corrections = nlohmann::json::array();
    for (const auto& [label, r] : results) {
      axis.insert(label);
      corrections.push_back({{"class_label", label},
                             {"S_origin", r.s_origin},
                             {"S_VTMM", r.s_vtmm},
                             {"lambda", r.lambda},
                             {"S_final", r.s_final}});
    }
    per_video.push_back({{"video_id", v.video_id()},
                         {"truth", truth},
                         {"baseline_predicted", base_pred},
                         {"predicted", final_pred},
                         {"corrections", std::move(corrections)}});
  }
  const std::vector<std::string> axis_list(axis.begin(), axis.end());
  nlohmann::json report = {{"revision", options.revision},
                           {"mode", to_string(options.mode)},
                           {"lambda", lambda},
                           {"normalization", to_string(normalization)}};
  report["baseline"] = evaluate(before, axis_list).to_json();
  report["corrected"] = evaluate(after, axis_list).to_json();
  report["videos"] = std::move(per_video);
  return report;
}

std::string render_evaluation_text(const nlohmann::json& evaluation) {
  std::ostringstream out;
  const auto classes = evaluation.at("classes").get<std::vector<std::string>>();
  const auto confusion = evaluation.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  const auto per_class = evaluation.at("per_class_accuracy").get<std::map<std::string, double>>();
  char line[256];
  std::snprintf(line, sizeof line, "accuracy %.4f (%zu/%zu)\n", evaluation.at("accuracy").get<double>(),
                evaluation.at("correct").get<std::size_t>(), evaluation.at("total").get<std::size_t>());
  out << line;
  std::size_t width = 5;
  for (const auto& c : classes) width = std::max(width, c.size());
  out << std::string(width, ' ');
  for (std::size_t j = 0; j < classes.size(); ++j) out << ' ' << std::to_string(j);
  out << "   acc\n";
  for (std::size_t i = 0; i < classes.size(); ++i) {
    out << classes[i] << std::string(width - classes[i].size(), ' ');
    for (std::size_t j = 0; j < classes.size(); ++j) {
      const std::string cell = std::to_string(confusion[i][j]);
      const std::string head = std::to_string(j);
      out << ' ' << std::string(head.size() > cell.size() ? head.size() - cell.size() : 0, ' ') << cell;
    }
    if (auto it = per_class.find(classes[i]); it != per_class.end()) {
      std::snprintf(line, sizeof line, "   %.3f", it->second);
      out << line;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace vtmm
