#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vtmm/embedding.hpp"
#include "vtmm/features.hpp"
#include "vtmm/pairs.hpp"

namespace vtmm {

/// Word table and hierarchy needed to assemble "raw" feature files.
struct AssemblyContext {
  const WordEmbeddingTable* words = nullptr;
  const LabelHierarchy* hierarchy = nullptr;
};

/// Parses a per-video feature document holding either "assembled" (2480
/// floats) or "raw" (visual_frames, object_frames, skeleton). Raw documents
/// need `ctx`; without it they fail with InvalidArgument.
VideoFeature parse_feature_document(const nlohmann::json& doc, const AssemblyContext& ctx = {});
VideoFeature load_feature_file(const std::filesystem::path& path, const AssemblyContext& ctx = {});
nlohmann::json assembled_feature_document(const VideoFeature& video);

struct IndexEntry {
  std::string video_id;
  std::string class_label;
  std::string file;   // relative to the dataset root
  std::string split;  // "train" | "test" | ""
};

inline constexpr const char* kIndexFile = "index.json";
inline constexpr const char* kCaptionsFile = "captions.json";
inline constexpr const char* kSentenceVectorsFile = "sentence_embeddings.json";
inline constexpr const char* kAnnotationsFile = "annotations.json";
inline constexpr const char* kBaselineFile = "baseline_scores.json";

std::vector<IndexEntry> load_index(const std::filesystem::path& root);
void write_index(const std::filesystem::path& root, const std::vector<IndexEntry>& entries);

/// A directory of feature files plus index.json.
class Dataset {
 public:
  static Dataset load(const std::filesystem::path& root, const AssemblyContext& ctx = {});

  const std::filesystem::path& root() const { return root_; }
  const std::vector<IndexEntry>& index() const { return index_; }
  const std::vector<VideoFeature>& videos() const { return videos_; }

  /// nullptr when unknown.
  const VideoFeature* find(const std::string& video_id) const;
  /// Videos of one split; "all" or "" selects every video.
  std::vector<const VideoFeature*> select(const std::string& split) const;

 private:
  std::filesystem::path root_;
  std::vector<IndexEntry> index_;
  std::vector<VideoFeature> videos_;
  std::map<std::string, std::size_t> by_id_;
};

std::vector<CaptionedVideo> load_captions(const std::filesystem::path& path);
nlohmann::json captions_document(const std::vector<CaptionedVideo>& captions);

/// video id -> class -> raw baseline score
using BaselineScores = std::map<std::string, std::map<std::string, double>>;
BaselineScores load_baseline_scores(const std::filesystem::path& path);

/// Writes the dataset layout (features/, index.json, captions.json,
/// sentence_embeddings.json, annotations.json with one description per class,
/// and a noisy baseline_scores.json) into `root`.
void write_synth_dataset(const std::filesystem::path& root, const SynthDataset& data, std::uint64_t seed);

/// Writes `doc` as indented JSON, replacing the file atomically.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace vtmm
