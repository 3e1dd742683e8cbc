#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vtmm/features.hpp"
#include "vtmm/types.hpp"

namespace vtmm {

struct CaptionedVideo {
  std::string video_id;
  std::string class_label;
  std::vector<std::string> captions;
};

struct TrainingPair {
  std::string video_id;
  std::string text;
  int label = 0;
  std::string text_class;  // class the caption was taken from

  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

/// One label-1 pair per (video, caption).
std::vector<TrainingPair> build_positives(std::span<const CaptionedVideo> videos);

/// `count` label-0 pairs: a uniformly drawn video with a caption drawn
/// uniformly from all captions of other classes, with replacement. Pair i uses
/// its own stream derived from (seed, i). Throws SingleClassDataset.
std::vector<TrainingPair> build_negatives(std::span<const CaptionedVideo> videos, std::size_t count,
                                          std::uint64_t seed);

/// Positives plus the same number of negatives.
std::vector<TrainingPair> build_training_pairs(std::span<const CaptionedVideo> videos, std::uint64_t seed);

struct SynthConfig {
  std::size_t classes = 5;
  std::size_t videos_per_class = 20;
  std::size_t captions_per_video = 3;
  double feature_noise = 0.1;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
};

struct SynthDataset {
  std::vector<std::string> class_labels;
  std::vector<VideoFeature> videos;
  std::vector<CaptionedVideo> captions;
  std::map<std::string, std::string> splits;            // video id -> "train" | "test"
  std::map<std::string, std::string> prototype_texts;   // class -> description text
  std::map<std::string, Vector> text_vectors;           // every caption and prototype text
};

/// Each class gets a Gaussian prototype video vector and text vector; videos
/// and captions are prototypes plus feature_noise-scaled Gaussian noise. The
/// last round(test_fraction * videos_per_class) videos of each class are test.
SynthDataset synth_dataset(const SynthConfig& cfg);

}  // namespace vtmm
