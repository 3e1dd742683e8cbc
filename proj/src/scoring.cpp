#include "vtmm/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>

#include "vtmm/error.hpp"

namespace vtmm {

const char* to_string(ScoreMode mode) { return mode == ScoreMode::Literal ? "literal" : "subtractive"; }

ScoreMode parse_score_mode(std::string_view text) {
  if (text == "literal") return ScoreMode::Literal;
  if (text == "subtractive") return ScoreMode::Subtractive;
  throw Error(Errc::InvalidArgument, "unknown score mode '" + std::string(text) + "'");
}

const char* to_string(FeatureKind kind) {
  return kind == FeatureKind::LongSentence ? "long-sentence" : "common-short";
}

FeatureKind parse_feature_kind(std::string_view text) {
  if (text == "long-sentence") return FeatureKind::LongSentence;
  if (text == "common-short") return FeatureKind::CommonShort;
  throw Error(Errc::ValidationFailed, "unknown feature kind '" + std::string(text) + "'");
}

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::vector<std::string> AnnotationSet::validate() const {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < common_features.size(); ++i) {
    const auto& f = common_features[i];
    const std::string where = "common_features[" + std::to_string(i) + "]";
    if (blank(f.text)) problems.push_back(where + ": empty text");
    if (f.weight == 0.0 || !std::isfinite(f.weight)) problems.push_back(where + ": weight must be finite and nonzero");
  }
  for (const auto& [label, features] : classes) {
    if (blank(label)) problems.push_back("class with empty label");
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto& f = features[i];
      const std::string where = "classes[" + label + "][" + std::to_string(i) + "]";
      if (blank(f.text)) problems.push_back(where + ": empty text");
      if (f.weight == 0.0 || !std::isfinite(f.weight)) problems.push_back(where + ": weight must be finite and nonzero");
      if (f.class_label != label) problems.push_back(where + ": class label '" + f.class_label + "' does not match");
    }
  }
  return problems;
}

std::size_t AnnotationSet::feature_count() const {
  std::size_t n = 0;
  for (const auto& [label, features] : classes) n += features.size();
  return n;
}

nlohmann::json AnnotationSet::to_json() const {
  nlohmann::json common = nlohmann::json::array();
  for (const auto& f : common_features) common.push_back({{"text", f.text}, {"weight", f.weight}});
  nlohmann::json cls = nlohmann::json::object();
  for (const auto& [label, features] : classes) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& f : features) {
      list.push_back({{"text", f.text}, {"weight", f.weight}, {"kind", to_string(f.kind)}});
    }
    cls[label] = std::move(list);
  }
  return {{"common_features", std::move(common)}, {"classes", std::move(cls)}};
}

AnnotationSet AnnotationSet::from_json(const nlohmann::json& doc) {
  AnnotationSet set;
  try {
    if (!doc.is_object()) throw Error(Errc::ValidationFailed, "annotation document must be an object");
    if (doc.contains("common_features")) {
      for (const auto& item : doc.at("common_features")) {
        set.common_features.push_back({item.at("text").get<std::string>(), item.value("weight", 1.0)});
      }
    }
    if (doc.contains("classes")) {
      for (const auto& [label, list] : doc.at("classes").items()) {
        auto& features = set.classes[label];
        for (const auto& item : list) {
          AnnotatedFeature f;
          f.text = item.at("text").get<std::string>();
          f.weight = item.value("weight", 1.0);
          f.class_label = label;
          f.kind = parse_feature_kind(item.value("kind", std::string("long-sentence")));
          features.push_back(std::move(f));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ValidationFailed, std::string("annotation schema: ") + e.what());
  }
  return set;
}

AnnotationSet AnnotationSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ValidationFailed, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

ClassScoreBreakdown class_score(std::span<const AnnotatedFeature> features, std::span<const double> degrees,
                                ScoreMode mode) {
  if (features.empty()) throw Error(Errc::NoFeatures, "class has no features");
  if (features.size() != degrees.size()) throw Error(Errc::DimensionMismatch, "one degree per feature required");

  ClassScoreBreakdown out;
  out.class_label = features.front().class_label;
  double pos_num = 0.0, pos_den = 0.0, neg_num = 0.0, neg_den = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double w = features[i].weight;
    if (w > 0.0) {
      pos_num += w * degrees[i];
      pos_den += w;
    } else if (w < 0.0) {
      neg_num += w * degrees[i];
      neg_den += w;
    }
    out.per_feature.push_back({features[i], degrees[i]});
  }
  out.s_p = pos_den != 0.0 ? pos_num / pos_den : 0.0;
  out.s_n = neg_den != 0.0 ? neg_num / neg_den : 0.0;
  out.s = mode == ScoreMode::Literal ? out.s_p + out.s_n : out.s_p - out.s_n;
  return out;
}

namespace {

template <class T>
bool ranks_before(const T& a, const T& b) {
  if (a.s != b.s) return a.s > b.s;
  return a.class_label < b.class_label;
}

}  // namespace

void sort_ranked(std::vector<ClassScoreBreakdown>& breakdowns) {
  std::stable_sort(breakdowns.begin(), breakdowns.end(), ranks_before<ClassScoreBreakdown>);
}

std::vector<RankedClass> rank(std::span<const ClassScoreBreakdown> breakdowns) {
  std::vector<RankedClass> out;
  out.reserve(breakdowns.size());
  for (const auto& b : breakdowns) out.push_back({b.class_label, b.s});
  std::stable_sort(out.begin(), out.end(), ranks_before<RankedClass>);
  return out;
}

const Vector& FeatureScorer::text_projection(const std::string& text) {
  {
    std::shared_lock lock(mutex_);
    if (auto it = texts_.find(text); it != texts_.end()) return it->second;
  }
  Vector projected = net_.project_text(embedder_.embed(text));
  std::unique_lock lock(mutex_);
  return texts_.try_emplace(text, std::move(projected)).first->second;
}

const Vector& FeatureScorer::video_projection(const VideoFeature& video) {
  {
    std::shared_lock lock(mutex_);
    if (auto it = videos_.find(video.video_id()); it != videos_.end()) return it->second;
  }
  Vector projected = net_.project_video(video.values());
  std::unique_lock lock(mutex_);
  return videos_.try_emplace(video.video_id(), std::move(projected)).first->second;
}

void FeatureScorer::prepare(const AnnotationSet& annotations) {
  for (const auto& [label, features] : annotations.classes) {
    for (const auto& f : features) text_projection(f.text);
  }
}

void FeatureScorer::retain_only(const AnnotationSet& annotations) {
  std::set<std::string> used;
  for (const auto& [label, features] : annotations.classes) {
    for (const auto& f : features) used.insert(f.text);
  }
  std::unique_lock lock(mutex_);
  std::erase_if(texts_, [&](const auto& entry) { return !used.contains(entry.first); });
}

std::size_t FeatureScorer::cached_texts() const {
  std::shared_lock lock(mutex_);
  return texts_.size();
}

double FeatureScorer::degree(const VideoFeature& video, const std::string& text) {
  return net_.score_projected(video_projection(video), text_projection(text));
}

std::vector<ClassScoreBreakdown> FeatureScorer::score(const VideoFeature& video, const AnnotationSet& annotations,
                                                      ScoreMode mode) {
  if (annotations.classes.empty()) throw Error(Errc::NoFeatures, "no annotated classes");
  const Vector& pv = video_projection(video);
  std::vector<ClassScoreBreakdown> out;
  out.reserve(annotations.classes.size());
  std::vector<double> degrees;
  for (const auto& [label, features] : annotations.classes) {
    if (features.empty()) throw Error(Errc::NoFeatures, "class '" + label + "' has no features");
    degrees.clear();
    for (const auto& f : features) degrees.push_back(net_.score_projected(pv, text_projection(f.text)));
    out.push_back(class_score(features, degrees, mode));
    out.back().class_label = label;
  }
  sort_ranked(out);
  return out;
}

std::vector<RankedClass> classify_standalone(const VideoFeature& video, const AnnotationSet& annotations,
                                             const MatchingNetwork& net, const SentenceEmbedder& embedder,
                                             ScoreMode mode) {
  FeatureScorer scorer(net, embedder);
  return rank(scorer.score(video, annotations, mode));
}

std::map<std::string, CorrectionResult> correct(const std::map<std::string, double>& baseline,
                                                const std::map<std::string, double>& vtmm, double lambda) {
  for (const auto& [label, s] : vtmm) {
    if (!baseline.contains(label)) {
      throw Error(Errc::UnknownClassInVTMM, "annotated class '" + label + "' has no baseline score");
    }
  }
  std::map<std::string, CorrectionResult> out;
  for (const auto& [label, origin] : baseline) {
    const auto it = vtmm.find(label);
    const double s_vtmm = it == vtmm.end() ? 0.0 : it->second;
    out.emplace(label, CorrectionResult{label, origin, s_vtmm, lambda, origin + lambda * s_vtmm});
  }
  return out;
}

std::string argmax(const std::map<std::string, double>& scores) {
  if (scores.empty()) throw Error(Errc::InvalidArgument, "argmax of an empty score set");
  auto best = scores.begin();
  for (auto it = scores.begin(); it != scores.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

std::string argmax(const std::map<std::string, CorrectionResult>& results) {
  if (results.empty()) throw Error(Errc::InvalidArgument, "argmax of an empty score set");
  auto best = results.begin();
  for (auto it = results.begin(); it != results.end(); ++it) {
    if (it->second.s_final > best->second.s_final) best = it;
  }
  return best->first;
}

std::map<std::string, double> softmax(const std::map<std::string, double>& scores) {
  if (scores.empty()) return {};
  double peak = scores.begin()->second;
  for (const auto& [label, s] : scores) peak = std::max(peak, s);
  double total = 0.0;
  std::map<std::string, double> out;
  for (const auto& [label, s] : scores) total += (out[label] = std::exp(s - peak));
  for (auto& [label, v] : out) v /= total;
  return out;
}

std::size_t Evaluation::count(const std::string& truth, const std::string& predicted) const {
  const auto row = std::lower_bound(classes.begin(), classes.end(), truth);
  const auto col = std::lower_bound(classes.begin(), classes.end(), predicted);
  if (row == classes.end() || *row != truth || col == classes.end() || *col != predicted) return 0;
  return confusion[static_cast<std::size_t>(row - classes.begin())][static_cast<std::size_t>(col - classes.begin())];
}

nlohmann::json Evaluation::to_json() const {
  return {
      {"accuracy", accuracy},
      {"correct", correct},
      {"total", total},
      {"classes", classes},
      {"confusion", confusion},
      {"per_class_accuracy", per_class_accuracy},
  };
}

Evaluation evaluate(std::span<const Prediction> predictions, std::span<const std::string> extra_classes) {
  if (predictions.empty()) throw Error(Errc::EmptyEvaluation, "nothing to evaluate");
  std::set<std::string> labels(extra_classes.begin(), extra_classes.end());
  for (const auto& p : predictions) {
    labels.insert(p.truth);
    labels.insert(p.predicted);
  }
  Evaluation ev;
  ev.classes.assign(labels.begin(), labels.end());
  const std::size_t n = ev.classes.size();
  ev.confusion.assign(n, std::vector<std::size_t>(n, 0));
  auto index = [&](const std::string& label) {
    return static_cast<std::size_t>(std::lower_bound(ev.classes.begin(), ev.classes.end(), label) -
                                    ev.classes.begin());
  };
  for (const auto& p : predictions) {
    ++ev.confusion[index(p.truth)][index(p.predicted)];
    if (p.truth == p.predicted) ++ev.correct;
  }
  ev.total = predictions.size();
  ev.accuracy = static_cast<double>(ev.correct) / static_cast<double>(ev.total);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t row = 0;
    for (std::size_t v : ev.confusion[i]) row += v;
    if (row > 0) ev.per_class_accuracy[ev.classes[i]] = static_cast<double>(ev.confusion[i][i]) / static_cast<double>(row);
  }
  return ev;
}

}  // namespace vtmm
