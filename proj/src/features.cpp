#include "vtmm/features.hpp"

#include <algorithm>
#include <cmath>

#include "vtmm/error.hpp"

namespace vtmm {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, std::string(what) + " contains a non-finite value");
  }
}

}  // namespace

VideoFeature::VideoFeature(std::string video_id, std::optional<std::string> class_label, Vector values)
    : video_id_(std::move(video_id)), class_label_(std::move(class_label)), values_(std::move(values)) {
  if (values_.size() != kVideoDim) {
    throw Error(Errc::DimensionMismatch, "video '" + video_id_ + "' feature has " + std::to_string(values_.size()) +
                                             " values, expected " + std::to_string(kVideoDim));
  }
  require_finite(values_, "video feature");
}

Vector average_visual(std::span<const Vector> frames) {
  if (frames.empty()) throw Error(Errc::EmptyFrameList, "no visual frames");
  Vector mean(kVisualDim, 0.0);
  for (const Vector& frame : frames) {
    if (frame.size() != kVisualDim) {
      throw Error(Errc::DimensionMismatch, "visual frame has " + std::to_string(frame.size()) + " values, expected " +
                                               std::to_string(kVisualDim));
    }
    require_finite(frame, "visual frame");
    for (std::size_t i = 0; i < kVisualDim; ++i) mean[i] += frame[i];
  }
  const double n = static_cast<double>(frames.size());
  for (double& v : mean) v /= n;
  return mean;
}

std::vector<ObjectScore> top_objects(std::span<const FrameObjectScores> frames, std::size_t k) {
  if (frames.empty()) throw Error(Errc::EmptyFrameList, "no object frames");
  std::map<std::string, double> sums;
  for (const auto& frame : frames) {
    if (frame.empty()) throw Error(Errc::InvalidArgument, "object frame has no entries");
    for (const auto& [label, p] : frame) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(Errc::InvalidArgument, "object probability for '" + label + "' outside [0,1]");
      }
      sums[label] += p;
    }
  }
  if (sums.size() < k) {
    throw Error(Errc::TooFewObjects,
                std::to_string(sums.size()) + " distinct objects, need " + std::to_string(k));
  }
  std::vector<ObjectScore> all;
  all.reserve(sums.size());
  const double n = static_cast<double>(frames.size());
  for (const auto& [label, sum] : sums) all.push_back({label, sum / n});
  std::stable_sort(all.begin(), all.end(), [](const ObjectScore& a, const ObjectScore& b) {
    if (a.mean_probability != b.mean_probability) return a.mean_probability > b.mean_probability;
    return a.label < b.label;
  });
  all.resize(k);
  return all;
}

VideoFeature assemble(std::span<const Vector> frames_visual, std::span<const FrameObjectScores> frames_objects,
                      std::span<const double> skeleton, const WordEmbeddingTable& table,
                      const LabelHierarchy& hierarchy, std::string video_id,
                      std::optional<std::string> class_label) {
  if (skeleton.size() != kSkeletonDim) {
    throw Error(Errc::DimensionMismatch, "skeleton feature has " + std::to_string(skeleton.size()) +
                                             " values, expected " + std::to_string(kSkeletonDim));
  }
  require_finite(skeleton, "skeleton feature");
  const Vector visual = average_visual(frames_visual);
  const auto objects = top_objects(frames_objects, kObjectSlots);

  Vector values;
  values.reserve(kVideoDim);
  for (const auto& obj : objects) {
    const auto resolved = resolve_with_fallback(table, hierarchy, obj.label);
    values.insert(values.end(), resolved.vector.begin(), resolved.vector.end());
  }
  values.insert(values.end(), skeleton.begin(), skeleton.end());
  values.insert(values.end(), visual.begin(), visual.end());
  return VideoFeature(std::move(video_id), std::move(class_label), std::move(values));
}

}  // namespace vtmm
