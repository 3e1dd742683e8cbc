#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtmm/embedding.hpp"
#include "vtmm/types.hpp"

namespace vtmm {

inline constexpr std::size_t kObjectSlots = 4;
inline constexpr std::size_t kObjectPartDim = kObjectSlots * kWordDim;  // 1200
inline constexpr std::size_t kSkeletonDim = 256;
inline constexpr std::size_t kVisualDim = 1024;
inline constexpr std::size_t kVideoDim = kObjectPartDim + kSkeletonDim + kVisualDim;  // 2480

static_assert(kVideoDim == 2480);

using FrameObjectScores = std::map<std::string, double>;

struct ObjectScore {
  std::string label;
  double mean_probability = 0.0;

  friend bool operator==(const ObjectScore&, const ObjectScore&) = default;
};

/// One video as the concatenation [objects | skeleton | visual].
class VideoFeature {
 public:
  VideoFeature() = default;
  /// Throws DimensionMismatch unless `values` has kVideoDim entries.
  VideoFeature(std::string video_id, std::optional<std::string> class_label, Vector values);

  const std::string& video_id() const { return video_id_; }
  const std::optional<std::string>& class_label() const { return class_label_; }
  std::span<const double> values() const { return values_; }

  std::span<const double> object_part() const { return values().subspan(0, kObjectPartDim); }
  std::span<const double> skeleton_part() const { return values().subspan(kObjectPartDim, kSkeletonDim); }
  std::span<const double> visual_part() const { return values().subspan(kObjectPartDim + kSkeletonDim, kVisualDim); }

 private:
  std::string video_id_;
  std::optional<std::string> class_label_;
  Vector values_;
};

/// Component-wise mean of per-frame visual vectors. Throws EmptyFrameList.
Vector average_visual(std::span<const Vector> frames);

/// Averages per-frame object probabilities (absent label = 0) and returns the
/// k best, descending, ties by label. Throws TooFewObjects.
std::vector<ObjectScore> top_objects(std::span<const FrameObjectScores> frames, std::size_t k = kObjectSlots);

VideoFeature assemble(std::span<const Vector> frames_visual, std::span<const FrameObjectScores> frames_objects,
                      std::span<const double> skeleton, const WordEmbeddingTable& table,
                      const LabelHierarchy& hierarchy, std::string video_id,
                      std::optional<std::string> class_label);

}  // namespace vtmm
