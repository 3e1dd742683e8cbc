#include "vtmm/service.hpp"

#include <charconv>
#include <regex>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "vtmm/error.hpp"

namespace vtmm {

namespace {

int status_for(Errc code) {
  switch (category(code)) {
    case ErrorCategory::Validation: return 400;
    case ErrorCategory::NotFound: return 404;
    case ErrorCategory::Conflict: return 409;
    case ErrorCategory::Io:
    case ErrorCategory::Contract: return 500;
  }
  return 500;
}

nlohmann::json error_body(const std::string& code, const std::string& message,
                          const std::vector<std::string>& diagnostics = {}) {
  return {{"error", {{"code", code}, {"message", message}, {"diagnostics", diagnostics}}}};
}

nlohmann::json parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  try {
    auto doc = nlohmann::json::parse(body);
    if (!doc.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("malformed JSON body: ") + e.what());
  }
}

RevisionId parse_revision(const std::string& text) {
  RevisionId id = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::InvalidArgument, "bad revision id '" + text + "'");
  }
  return id;
}

}  // namespace

SentenceEmbedder load_embedder(const Project& project) {
  const auto& name = project.config().embeddings;
  if (name.empty() || name == "stub") return SentenceEmbedder::stub();
  return SentenceEmbedder::load_precomputed(project.resolve(name));
}

Service::Service(Project project, MatchingNetwork net, Dataset dataset, SentenceEmbedder embedder)
    : project_(std::move(project)),
      net_(std::move(net)),
      dataset_(std::move(dataset)),
      embedder_(std::move(embedder)),
      scorer_(std::make_unique<FeatureScorer>(net_, embedder_)),
      annotations_(std::make_shared<const AnnotationSet>(project_.active().snapshot)) {
  net_.set_dropout_rate(0.0);
}

std::unique_ptr<Service> Service::from_project(const std::filesystem::path& root) {
  Project project = Project::open_or_init(root);
  const auto& cfg = project.config();
  if (cfg.dataset.empty() || cfg.checkpoint.empty()) {
    throw Error(Errc::InvalidArgument, "project has no dataset or checkpoint configured");
  }
  Dataset dataset = Dataset::load(project.resolve(cfg.dataset));
  MatchingNetwork net = load_checkpoint(project.resolve(cfg.checkpoint));
  SentenceEmbedder embedder = load_embedder(project);
  return std::make_unique<Service>(std::move(project), std::move(net), std::move(dataset), std::move(embedder));
}

RevisionId Service::revision() const {
  std::shared_lock lock(state_mutex_);
  return project_.active_revision();
}

Service::Snapshot Service::snapshot() const {
  std::shared_lock lock(state_mutex_);
  return {project_.active_revision(), annotations_};
}

ReportOptions Service::options(RevisionId revision) const {
  const auto& cfg = project_.config();
  return {cfg.mode, cfg.top_k, revision};
}

Service::Response Service::handle(const std::string& method, const std::string& path, const std::string& body) {
  static const std::regex diff_route(R"(^/v1/revisions/(-?\d+)/diff/(-?\d+)$)");
  Response response;
  try {
    std::smatch m;
    if (method == "GET" && path == "/v1/classes") {
      response = get_classes();
    } else if (method == "GET" && path == "/v1/annotations") {
      response = get_annotations();
    } else if (method == "PUT" && path == "/v1/annotations") {
      response = put_annotations(parse_body(body));
    } else if (method == "POST" && path == "/v1/score") {
      response = post_score(parse_body(body));
    } else if (method == "POST" && path == "/v1/evaluate") {
      response = post_evaluate(parse_body(body));
    } else if (method == "POST" && path == "/v1/correct") {
      response = post_correct(parse_body(body));
    } else if (method == "GET" && path == "/v1/revisions") {
      response = get_revisions();
    } else if (method == "GET" && std::regex_match(path, m, diff_route)) {
      response = get_diff(parse_revision(m[1]), parse_revision(m[2]));
    } else {
      response = {404, error_body("NotFound", "no route for " + method + " " + path)};
    }
  } catch (const Error& e) {
    response = {status_for(e.code()), error_body(to_string(e.code()), e.what(), e.diagnostics())};
  } catch (const std::exception& e) {
    response = {500, error_body("Internal", e.what())};
  }
  if (!response.body.contains("revision")) response.body["revision"] = revision();
  return response;
}

Service::Response Service::get_classes() {
  const auto snap = snapshot();
  std::map<std::string, std::size_t> counts;
  for (const auto& entry : dataset_.index()) {
    if (!entry.class_label.empty()) counts.emplace(entry.class_label, 0);
  }
  for (const auto& [label, features] : snap.annotations->classes) counts[label] = features.size();
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [label, n] : counts) list.push_back({{"class_label", label}, {"feature_count", n}});
  return {200, {{"revision", snap.revision}, {"classes", list}}};
}

Service::Response Service::get_annotations() {
  const auto snap = snapshot();
  return {200, {{"revision", snap.revision}, {"annotations", snap.annotations->to_json()}}};
}

Service::Response Service::put_annotations(const nlohmann::json& body) {
  std::unique_lock writer(write_mutex_, std::try_to_lock);
  if (!writer.owns_lock()) throw Error(Errc::WriteConflict, "another annotation write is in progress");

  const bool wrapped = body.contains("annotations");
  AnnotationSet next = AnnotationSet::from_json(wrapped ? body.at("annotations") : body);
  const std::string note = wrapped ? body.value("note", std::string()) : std::string();
  std::optional<RevisionId> base;
  if (wrapped && body.contains("base_revision")) base = body.at("base_revision").get<RevisionId>();

  for (auto& [label, features] : next.classes) {
    for (auto& f : features) f.class_label = label;
  }
  if (auto problems = next.validate(); !problems.empty()) {
    throw Error(Errc::ValidationFailed, "annotation snapshot failed validation", std::move(problems));
  }
  // Every text must be embeddable before the revision is recorded.
  scorer_->prepare(next);

  std::unique_lock state(state_mutex_);
  const RevisionId id = project_.commit_annotations(next, note, base);
  annotations_ = std::make_shared<const AnnotationSet>(project_.active().snapshot);
  scorer_->retain_only(*annotations_);
  spdlog::info("committed annotation revision {}", id);
  return {200, {{"revision", id}}};
}

Service::Response Service::post_score(const nlohmann::json& body) {
  const auto video_id = body.value("video_id", std::string());
  const VideoFeature* video = dataset_.find(video_id);
  if (!video) throw Error(Errc::UnknownVideo, "unknown video '" + video_id + "'");

  std::shared_lock state(state_mutex_);
  const RevisionId rev = project_.active_revision();
  const auto annotations = annotations_;
  auto breakdowns = scorer_->score(*video, *annotations, project_.config().mode);
  if (body.contains("class") && !body.at("class").is_null()) {
    const auto wanted = body.at("class").get<std::string>();
    std::erase_if(breakdowns, [&](const auto& b) { return b.class_label != wanted; });
    if (breakdowns.empty()) throw Error(Errc::UnknownClass, "class '" + wanted + "' has no annotations");
  }
  nlohmann::json list = nlohmann::json::array();
  for (const auto& b : breakdowns) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& fd : b.per_feature) {
      features.push_back({{"text", fd.feature.text},
                          {"weight", fd.feature.weight},
                          {"kind", to_string(fd.feature.kind)},
                          {"degree", fd.degree}});
    }
    list.push_back({{"class_label", b.class_label}, {"s", b.s}, {"s_p", b.s_p}, {"s_n", b.s_n}, {"features", features}});
  }
  return {200, {{"revision", rev}, {"video_id", video_id}, {"breakdowns", list}}};
}

Service::Response Service::post_evaluate(const nlohmann::json& body) {
  const auto split = body.value("split", std::string("all"));
  std::shared_lock state(state_mutex_);
  const auto videos = dataset_.select(split);
  return {200, evaluation_report(*scorer_, videos, *annotations_, options(project_.active_revision()))};
}

Service::Response Service::post_correct(const nlohmann::json& body) {
  const auto& cfg = project_.config();
  const double lambda = body.value("lambda", cfg.lambda);
  const auto ref = body.value("baseline_ref", std::string(kBaselineFile));
  const auto normalization =
      body.contains("normalization") ? parse_normalization(body.at("normalization").get<std::string>()) : cfg.normalization;
  const auto split = body.value("split", std::string("all"));

  std::filesystem::path path(ref);
  if (!path.is_absolute()) path = dataset_.root() / path;
  if (!std::filesystem::exists(path)) throw Error(Errc::InvalidArgument, "baseline file '" + ref + "' not found");
  const auto baseline = load_baseline_scores(path);

  std::shared_lock state(state_mutex_);
  const auto videos = dataset_.select(split);
  return {200, correction_report(*scorer_, videos, *annotations_, baseline, lambda, normalization,
                                 options(project_.active_revision()))};
}

Service::Response Service::get_revisions() {
  std::shared_lock state(state_mutex_);
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : project_.revisions()) {
    list.push_back({{"id", r.id},
                    {"parent", r.parent ? nlohmann::json(*r.parent) : nlohmann::json(nullptr)},
                    {"timestamp", r.timestamp},
                    {"note", r.note},
                    {"feature_count", r.snapshot.feature_count()}});
  }
  return {200, {{"revision", project_.active_revision()}, {"revisions", list}}};
}

Service::Response Service::get_diff(RevisionId from, RevisionId to) {
  std::shared_lock state(state_mutex_);
  return {200,
          {{"revision", project_.active_revision()}, {"from", from}, {"to", to}, {"changes", diff_to_json(project_.diff(from, to))}}};
}

void Service::attach(httplib::Server& server) {
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(R"(/v1/.*)", forward);
  server.Put(R"(/v1/.*)", forward);
  server.Post(R"(/v1/.*)", forward);
}

void serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  service.attach(server);
  spdlog::info("listening on {}:{}", host, port);
  if (!server.listen(host, port)) throw Error(Errc::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace vtmm
