#pragma once
// Small on-disk world: synthetic dataset, an untrained full-size network and
// a project pointing at both.

#include "test_util.hpp"
#include "vtmm/dataset.hpp"
#include "vtmm/net.hpp"
#include "vtmm/store.hpp"

namespace testutil {

struct World {
  std::filesystem::path data, checkpoint, project;
};

inline World make_world(const TempDir& dir, std::uint64_t seed = 5) {
  vtmm::SynthConfig cfg;
  cfg.classes = 3;
  cfg.videos_per_class = 4;
  cfg.captions_per_video = 2;
  cfg.seed = seed;
  cfg.test_fraction = 0.25;
  World w{dir / "data", dir / "model.ckpt", dir / "proj"};
  vtmm::write_synth_dataset(w.data, vtmm::synth_dataset(cfg), seed);
  vtmm::save_checkpoint(vtmm::MatchingNetwork::initialized(vtmm::NetDims{}, seed), w.checkpoint);
  auto project = vtmm::Project::open_or_init(w.project);
  vtmm::ProjectConfig pc;
  pc.dataset = w.data.string();
  pc.checkpoint = w.checkpoint.string();
  pc.embeddings = (w.data / vtmm::kSentenceVectorsFile).string();
  project.set_config(pc);
  project.commit_annotations(vtmm::AnnotationSet::load(w.data / vtmm::kAnnotationsFile), "initial");
  return w;
}

}  // namespace testutil
