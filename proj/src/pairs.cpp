#include "vtmm/pairs.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "vtmm/error.hpp"
#include "vtmm/rng.hpp"

namespace vtmm {

std::vector<TrainingPair> build_positives(std::span<const CaptionedVideo> videos) {
  std::vector<TrainingPair> pairs;
  for (const auto& v : videos) {
    for (const auto& caption : v.captions) pairs.push_back({v.video_id, caption, 1, v.class_label});
  }
  return pairs;
}

std::vector<TrainingPair> build_negatives(std::span<const CaptionedVideo> videos, std::size_t count,
                                          std::uint64_t seed) {
  std::set<std::string> classes;
  for (const auto& v : videos) classes.insert(v.class_label);
  if (classes.size() < 2) throw Error(Errc::SingleClassDataset, "negative pairs need at least two classes");

  struct CaptionRef {
    const std::string* text;
    const std::string* cls;
  };
  std::vector<CaptionRef> all;
  for (const auto& v : videos) {
    for (const auto& c : v.captions) all.push_back({&c, &v.class_label});
  }
  // Candidate pools per class: every caption from a different class.
  std::map<std::string, std::vector<std::size_t>> foreign;
  for (const auto& cls : classes) {
    auto& pool = foreign[cls];
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (*all[i].cls != cls) pool.push_back(i);
    }
  }

  std::vector<TrainingPair> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    const CaptionedVideo& video = videos[rng.below(videos.size())];
    const auto& pool = foreign.at(video.class_label);
    if (pool.empty()) throw Error(Errc::SingleClassDataset, "other classes have no captions");
    const CaptionRef& pick = all[pool[rng.below(pool.size())]];
    pairs.push_back({video.video_id, *pick.text, 0, *pick.cls});
  }
  return pairs;
}

std::vector<TrainingPair> build_training_pairs(std::span<const CaptionedVideo> videos, std::uint64_t seed) {
  auto pairs = build_positives(videos);
  auto negatives = build_negatives(videos, pairs.size(), seed);
  pairs.insert(pairs.end(), negatives.begin(), negatives.end());
  return pairs;
}

namespace {

std::string numbered(const char* prefix, std::size_t n, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
  return buf;
}

Vector gaussian(Rng& rng, std::size_t n) {
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

Vector perturbed(const Vector& base, double noise, Rng& rng) {
  Vector v = base;
  if (noise != 0.0) {
    for (double& x : v) x += noise * rng.normal();
  }
  return v;
}

}  // namespace

SynthDataset synth_dataset(const SynthConfig& cfg) {
  if (cfg.classes < 2) throw Error(Errc::InvalidArgument, "synthetic dataset needs at least two classes");
  if (cfg.videos_per_class < 1 || cfg.captions_per_video < 1) {
    throw Error(Errc::InvalidArgument, "videos and captions per class must be positive");
  }
  if (!(cfg.test_fraction >= 0.0 && cfg.test_fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "test fraction must lie in [0,1)");
  }
  SynthDataset out;
  const auto test_per_class =
      static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(cfg.videos_per_class)));

  for (std::size_t c = 0; c < cfg.classes; ++c) {
    const std::string label = numbered("class_", c, 2);
    out.class_labels.push_back(label);
    Rng proto_rng(derive_seed(cfg.seed, 2 * c));
    const Vector video_proto = gaussian(proto_rng, kVideoDim);
    const Vector text_proto = gaussian(proto_rng, kSentenceDim);

    const std::string proto_text = "a video of " + label;
    out.prototype_texts[label] = proto_text;
    out.text_vectors[proto_text] = text_proto;

    Rng sample_rng(derive_seed(cfg.seed, 2 * c + 1));
    for (std::size_t v = 0; v < cfg.videos_per_class; ++v) {
      const std::string id = label + numbered("_v", v, 3);
      out.videos.emplace_back(id, label, perturbed(video_proto, cfg.feature_noise, sample_rng));
      out.splits[id] = v + test_per_class >= cfg.videos_per_class ? "test" : "train";
      CaptionedVideo cv{id, label, {}};
      for (std::size_t k = 0; k < cfg.captions_per_video; ++k) {
        std::string text = id + " caption " + std::to_string(k);
        out.text_vectors[text] = perturbed(text_proto, cfg.feature_noise, sample_rng);
        cv.captions.push_back(std::move(text));
      }
      out.captions.push_back(std::move(cv));
    }
  }
  return out;
}

}  // namespace vtmm
