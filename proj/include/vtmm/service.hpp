#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "vtmm/dataset.hpp"
#include "vtmm/net.hpp"
#include "vtmm/report.hpp"
#include "vtmm/scoring.hpp"
#include "vtmm/store.hpp"

namespace httplib {
class Server;
}

namespace vtmm {

/// Loads the embedder named by a project config: "stub" or a JSON file path.
SentenceEmbedder load_embedder(const Project& project);

/// Loaded project, inference-only network, dataset features and a text cache.
/// Routes:
///   GET  /v1/classes
///   GET  /v1/annotations
///   PUT  /v1/annotations
///   POST /v1/score      {video_id, class?}
///   POST /v1/evaluate   {split?}
///   POST /v1/correct    {lambda?, baseline_ref?, normalization?, split?}
///   GET  /v1/revisions
///   GET  /v1/revisions/{id}/diff/{other}
/// Every response body carries "revision", the active revision id.
class Service {
 public:
  struct Response {
    int status = 200;
    nlohmann::json body;
  };

  Service(Project project, MatchingNetwork net, Dataset dataset, SentenceEmbedder embedder);

  /// Reads dataset, checkpoint and embeddings from the project's config.
  static std::unique_ptr<Service> from_project(const std::filesystem::path& root);

  Response handle(const std::string& method, const std::string& path, const std::string& body);

  /// Installs catch-all handlers that forward to handle().
  void attach(httplib::Server& server);

  RevisionId revision() const;

 private:
  struct Snapshot {
    RevisionId revision = 0;
    std::shared_ptr<const AnnotationSet> annotations;
  };

  Snapshot snapshot() const;
  ReportOptions options(RevisionId revision) const;

  Response get_classes();
  Response get_annotations();
  Response put_annotations(const nlohmann::json& body);
  Response post_score(const nlohmann::json& body);
  Response post_evaluate(const nlohmann::json& body);
  Response post_correct(const nlohmann::json& body);
  Response get_revisions();
  Response get_diff(RevisionId from, RevisionId to);

  Project project_;
  MatchingNetwork net_;
  Dataset dataset_;
  SentenceEmbedder embedder_;
  std::unique_ptr<FeatureScorer> scorer_;

  mutable std::shared_mutex state_mutex_;  // guards project_ reads and the active snapshot
  std::mutex write_mutex_;                 // single writer; a busy writer yields 409
  std::shared_ptr<const AnnotationSet> annotations_;
};

/// Blocks serving on host:port until the server is stopped.
void serve(Service& service, const std::string& host, int port);

}  // namespace vtmm
