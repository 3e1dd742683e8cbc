#include "vtmm/dataset.hpp"

#include <fstream>

#include "vtmm/error.hpp"
#include "vtmm/rng.hpp"

namespace vtmm {

namespace fs = std::filesystem;

void write_json_file(const fs::path& path, const nlohmann::json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    out << doc.dump(1) << '\n';
    if (!out) throw Error(Errc::Io, "failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::Io, "cannot replace " + path.string() + ": " + ec.message());
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, path.string() + ": " + e.what());
  }
}

VideoFeature parse_feature_document(const nlohmann::json& doc, const AssemblyContext& ctx) {
  try {
    auto id = doc.at("video_id").get<std::string>();
    std::optional<std::string> label;
    if (doc.contains("class_label") && !doc.at("class_label").is_null()) label = doc.at("class_label").get<std::string>();

    if (doc.contains("assembled")) return VideoFeature(std::move(id), std::move(label), doc.at("assembled").get<Vector>());
    if (!doc.contains("raw")) throw Error(Errc::InvalidArgument, "feature file for '" + id + "' has neither raw nor assembled");
    if (!ctx.words || !ctx.hierarchy) {
      throw Error(Errc::InvalidArgument, "raw feature file for '" + id + "' needs a word table and label hierarchy");
    }
    const auto& raw = doc.at("raw");
    const auto visual = raw.at("visual_frames").get<std::vector<Vector>>();
    const auto objects = raw.at("object_frames").get<std::vector<FrameObjectScores>>();
    const auto skeleton = raw.at("skeleton").get<Vector>();
    return assemble(visual, objects, skeleton, *ctx.words, *ctx.hierarchy, std::move(id), std::move(label));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("feature document: ") + e.what());
  }
}

VideoFeature load_feature_file(const fs::path& path, const AssemblyContext& ctx) {
  try {
    return parse_feature_document(read_json_file(path), ctx);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what(), e.diagnostics());
  }
}

nlohmann::json assembled_feature_document(const VideoFeature& video) {
  nlohmann::json doc = {{"video_id", video.video_id()}};
  if (video.class_label()) doc["class_label"] = *video.class_label();
  doc["assembled"] = std::vector<double>(video.values().begin(), video.values().end());
  return doc;
}

std::vector<IndexEntry> load_index(const fs::path& root) {
  const auto doc = read_json_file(root / kIndexFile);
  std::vector<IndexEntry> out;
  try {
    for (const auto& v : doc.at("videos")) {
      out.push_back({v.at("video_id").get<std::string>(), v.value("class_label", std::string()),
                     v.at("file").get<std::string>(), v.value("split", std::string())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, (root / kIndexFile).string() + ": " + e.what());
  }
  return out;
}

void write_index(const fs::path& root, const std::vector<IndexEntry>& entries) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries) {
    list.push_back({{"video_id", e.video_id}, {"class_label", e.class_label}, {"file", e.file}, {"split", e.split}});
  }
  write_json_file(root / kIndexFile, {{"videos", std::move(list)}});
}

Dataset Dataset::load(const fs::path& root, const AssemblyContext& ctx) {
  Dataset ds;
  ds.root_ = root;
  ds.index_ = load_index(root);
  ds.videos_.reserve(ds.index_.size());
  for (const auto& entry : ds.index_) {
    VideoFeature v = load_feature_file(root / entry.file, ctx);
    if (v.video_id() != entry.video_id) {
      throw Error(Errc::InvalidArgument, entry.file + ": video id '" + v.video_id() + "' differs from index '" +
                                             entry.video_id + "'");
    }
    if (!v.class_label() && !entry.class_label.empty()) {
      v = VideoFeature(v.video_id(), entry.class_label, Vector(v.values().begin(), v.values().end()));
    }
    if (!ds.by_id_.emplace(entry.video_id, ds.videos_.size()).second) {
      throw Error(Errc::InvalidArgument, "duplicate video id '" + entry.video_id + "' in index");
    }
    ds.videos_.push_back(std::move(v));
  }
  return ds;
}

const VideoFeature* Dataset::find(const std::string& video_id) const {
  auto it = by_id_.find(video_id);
  return it == by_id_.end() ? nullptr : &videos_[it->second];
}

std::vector<const VideoFeature*> Dataset::select(const std::string& split) const {
  std::vector<const VideoFeature*> out;
  for (std::size_t i = 0; i < index_.size(); ++i) {
    if (split.empty() || split == "all" || index_[i].split == split) out.push_back(&videos_[i]);
  }
  return out;
}

std::vector<CaptionedVideo> load_captions(const fs::path& path) {
  const auto doc = read_json_file(path);
  std::vector<CaptionedVideo> out;
  try {
    for (const auto& item : doc) {
      CaptionedVideo cv{item.at("video_id").get<std::string>(), item.at("class_label").get<std::string>(),
                        item.at("captions").get<std::vector<std::string>>()};
      if (cv.captions.empty() || cv.class_label.empty()) {
        throw Error(Errc::InvalidArgument, path.string() + ": video '" + cv.video_id + "' needs a class and captions");
      }
      out.push_back(std::move(cv));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, path.string() + ": " + e.what());
  }
  return out;
}

nlohmann::json captions_document(const std::vector<CaptionedVideo>& captions) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& cv : captions) {
    list.push_back({{"video_id", cv.video_id}, {"class_label", cv.class_label}, {"captions", cv.captions}});
  }
  return list;
}

BaselineScores load_baseline_scores(const fs::path& path) {
  const auto doc = read_json_file(path);
  try {
    return doc.get<BaselineScores>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_synth_dataset(const fs::path& root, const SynthDataset& data, std::uint64_t seed) {
  fs::create_directories(root / "features");
  std::vector<IndexEntry> index;
  for (const auto& v : data.videos) {
    const std::string file = "features/" + v.video_id() + ".json";
    write_json_file(root / file, assembled_feature_document(v));
    index.push_back({v.video_id(), v.class_label().value_or(""), file, data.splits.at(v.video_id())});
  }
  write_index(root, index);
  write_json_file(root / kCaptionsFile, captions_document(data.captions));

  nlohmann::json vectors = nlohmann::json::object();
  for (const auto& [text, v] : data.text_vectors) vectors[text] = v;
  write_json_file(root / kSentenceVectorsFile, vectors);

  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [label, text] : data.prototype_texts) {
    classes[label] = nlohmann::json::array({{{"text", text}, {"weight", 1.0}, {"kind", "long-sentence"}}});
  }
  write_json_file(root / kAnnotationsFile, {{"common_features", nlohmann::json::array()}, {"classes", classes}});

  // A weak stand-in for another recognizer: uniform noise plus a bonus on the
  // true class, so it is right most of the time but not always.
  nlohmann::json baseline = nlohmann::json::object();
  for (std::size_t i = 0; i < data.videos.size(); ++i) {
    const auto& v = data.videos[i];
    Rng rng(derive_seed(seed ^ 0xba5e11e5ULL, i));
    nlohmann::json scores = nlohmann::json::object();
    for (const auto& label : data.class_labels) {
      scores[label] = rng.uniform01() + (label == v.class_label() ? 0.35 : 0.0);
    }
    baseline[v.video_id()] = std::move(scores);
  }
  write_json_file(root / kBaselineFile, baseline);
}

}  // namespace vtmm
