#include "vtmm/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <set>

#include "vtmm/dataset.hpp"
#include "vtmm/error.hpp"

namespace vtmm {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "project.json";
constexpr const char* kFormat = "vtmm-project";
constexpr int kFormatVersion = 1;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class FileLock {
 public:
  explicit FileLock(const fs::path& path) : fd_(::open(path.c_str(), O_CREAT | O_RDWR, 0644)) {
    if (fd_ < 0) throw Error(Errc::Io, "cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error(Errc::Io, "cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_;
};

AnnotationRevision revision_from_json(const nlohmann::json& doc) {
  AnnotationRevision rev;
  rev.id = doc.at("revision").get<RevisionId>();
  if (!doc.at("parent").is_null()) rev.parent = doc.at("parent").get<RevisionId>();
  rev.timestamp = doc.at("timestamp").get<std::string>();
  rev.note = doc.at("note").get<std::string>();
  rev.snapshot = AnnotationSet::from_json(doc.at("annotations"));
  return rev;
}

using FeatureKey = std::pair<std::string, FeatureKind>;

std::map<FeatureKey, const AnnotatedFeature*> keyed(const std::vector<AnnotatedFeature>& features) {
  std::map<FeatureKey, const AnnotatedFeature*> out;
  for (const auto& f : features) out.emplace(FeatureKey{f.text, f.kind}, &f);
  return out;
}

}  // namespace

nlohmann::json ProjectConfig::to_json() const {
  return {{"dataset", dataset},         {"checkpoint", checkpoint}, {"embeddings", embeddings},
          {"mode", to_string(mode)},    {"lambda", lambda},         {"normalization", to_string(normalization)},
          {"seed", seed},               {"top_k", top_k}};
}

ProjectConfig ProjectConfig::from_json(const nlohmann::json& doc) {
  ProjectConfig c;
  c.dataset = doc.value("dataset", std::string());
  c.checkpoint = doc.value("checkpoint", std::string());
  c.embeddings = doc.value("embeddings", std::string());
  c.mode = parse_score_mode(doc.value("mode", std::string("literal")));
  c.lambda = doc.value("lambda", kDefaultLambda);
  c.normalization = parse_normalization(doc.value("normalization", std::string("none")));
  c.seed = doc.value("seed", std::uint64_t{0});
  c.top_k = doc.value("top_k", std::size_t{3});
  return c;
}

nlohmann::json diff_to_json(const std::vector<ClassDiff>& diff) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : diff) {
    auto features = [](const std::vector<AnnotatedFeature>& list) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& f : list) arr.push_back({{"text", f.text}, {"weight", f.weight}, {"kind", to_string(f.kind)}});
      return arr;
    };
    nlohmann::json changes = nlohmann::json::array();
    for (const auto& w : d.weight_changes) {
      changes.push_back({{"text", w.text}, {"kind", to_string(w.kind)}, {"before", w.before}, {"after", w.after}});
    }
    out.push_back({{"class_label", d.class_label},
                   {"added", features(d.added)},
                   {"removed", features(d.removed)},
                   {"weight_changes", std::move(changes)}});
  }
  return out;
}

std::vector<ClassDiff> diff_annotations(const AnnotationSet& from, const AnnotationSet& to) {
  std::set<std::string> labels;
  for (const auto& [label, f] : from.classes) labels.insert(label);
  for (const auto& [label, f] : to.classes) labels.insert(label);
  static const std::vector<AnnotatedFeature> kNone;

  std::vector<ClassDiff> out;
  for (const auto& label : labels) {
    const auto a_it = from.classes.find(label);
    const auto b_it = to.classes.find(label);
    const auto a = keyed(a_it == from.classes.end() ? kNone : a_it->second);
    const auto b = keyed(b_it == to.classes.end() ? kNone : b_it->second);
    ClassDiff d{label, {}, {}, {}};
    for (const auto& [key, f] : b) {
      auto hit = a.find(key);
      if (hit == a.end()) {
        d.added.push_back(*f);
      } else if (hit->second->weight != f->weight) {
        d.weight_changes.push_back({key.first, key.second, hit->second->weight, f->weight});
      }
    }
    for (const auto& [key, f] : a) {
      if (!b.contains(key)) d.removed.push_back(*f);
    }
    if (!d.added.empty() || !d.removed.empty() || !d.weight_changes.empty()) out.push_back(std::move(d));
  }
  return out;
}

Project Project::open_or_init(const fs::path& root) {
  std::error_code ec;
  if (fs::exists(root, ec) && !fs::is_directory(root, ec)) {
    throw Error(Errc::InvalidArgument, root.string() + " is not a directory");
  }
  fs::create_directories(root / "revisions", ec);
  if (ec) throw Error(Errc::Io, "cannot create project at " + root.string() + ": " + ec.message());

  Project p;
  p.root_ = root;
  if (fs::exists(root / kManifest)) {
    p.load();
    return p;
  }
  FileLock lock(root / ".lock");
  if (fs::exists(root / kManifest)) {
    p.load();
    return p;
  }
  AnnotationRevision initial{0, std::nullopt, utc_now(), "initial empty revision", {}};
  p.write_revision(initial);
  p.revisions_.push_back(std::move(initial));
  p.active_ = 0;
  p.save_manifest();
  return p;
}

void Project::set_config(ProjectConfig config) {
  FileLock lock(root_ / ".lock");
  load();
  config_ = std::move(config);
  save_manifest();
}

fs::path Project::resolve(const std::string& path) const {
  if (path.empty()) return {};
  const fs::path p(path);
  return p.is_absolute() ? p : root_ / p;
}

fs::path Project::revision_path(RevisionId id) const {
  char name[32];
  std::snprintf(name, sizeof name, "%04lld.json", static_cast<long long>(id));
  return root_ / "revisions" / name;
}

void Project::write_revision(const AnnotationRevision& rev) const {
  nlohmann::json doc = {{"revision", rev.id},
                        {"parent", rev.parent ? nlohmann::json(*rev.parent) : nlohmann::json(nullptr)},
                        {"timestamp", rev.timestamp},
                        {"note", rev.note},
                        {"annotations", rev.snapshot.to_json()}};
  write_json_file(revision_path(rev.id), doc);
}

void Project::save_manifest() const {
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& r : revisions_) ids.push_back(r.id);
  write_json_file(root_ / kManifest, {{"format", kFormat},
                                      {"version", kFormatVersion},
                                      {"active_revision", active_},
                                      {"revisions", ids},
                                      {"config", config_.to_json()}});
}

void Project::load() {
  const fs::path manifest = root_ / kManifest;
  try {
    const auto doc = read_json_file(manifest);
    if (doc.at("format").get<std::string>() != kFormat) throw Error(Errc::CorruptProject, "not a project manifest");
    if (doc.at("version").get<int>() != kFormatVersion) {
      throw Error(Errc::CorruptProject, "unsupported project format version");
    }
    config_ = ProjectConfig::from_json(doc.value("config", nlohmann::json::object()));
    revisions_.clear();
    RevisionId previous = -1;
    for (const auto& id_json : doc.at("revisions")) {
      const auto id = id_json.get<RevisionId>();
      if (id <= previous) throw Error(Errc::CorruptProject, "revision ids are not strictly increasing");
      previous = id;
      AnnotationRevision rev = revision_from_json(read_json_file(revision_path(id)));
      if (rev.id != id) throw Error(Errc::CorruptProject, revision_path(id).string() + " holds a different revision");
      revisions_.push_back(std::move(rev));
    }
    active_ = doc.at("active_revision").get<RevisionId>();
    if (std::none_of(revisions_.begin(), revisions_.end(), [&](const auto& r) { return r.id == active_; })) {
      throw Error(Errc::CorruptProject, "active revision does not exist");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptProject, manifest.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::CorruptProject) throw;
    throw Error(Errc::CorruptProject, std::string("cannot load project: ") + e.what());
  }
}

const AnnotationRevision& Project::revision(RevisionId id) const {
  auto it = std::find_if(revisions_.begin(), revisions_.end(), [&](const auto& r) { return r.id == id; });
  if (it == revisions_.end()) throw Error(Errc::UnknownRevision, "unknown revision " + std::to_string(id));
  return *it;
}

RevisionId Project::commit_annotations(const AnnotationSet& snapshot, const std::string& note,
                                       std::optional<RevisionId> expected_base) {
  AnnotationSet normalized = snapshot;
  for (auto& [label, features] : normalized.classes) {
    for (auto& f : features) {
      if (f.class_label.empty()) f.class_label = label;
    }
  }
  if (auto problems = normalized.validate(); !problems.empty()) {
    throw Error(Errc::ValidationFailed, "annotation snapshot failed validation", std::move(problems));
  }

  FileLock lock(root_ / ".lock");
  load();  // pick up commits from other writers
  if (expected_base && *expected_base != active_) {
    throw Error(Errc::WriteConflict, "active revision is " + std::to_string(active_) + ", not " +
                                         std::to_string(*expected_base));
  }
  AnnotationRevision rev;
  rev.id = revisions_.back().id + 1;
  rev.parent = active_;
  rev.timestamp = utc_now();
  rev.note = note;
  rev.snapshot = std::move(normalized);
  write_revision(rev);
  revisions_.push_back(std::move(rev));
  active_ = revisions_.back().id;
  save_manifest();
  return active_;
}

std::vector<ClassDiff> Project::diff(RevisionId a, RevisionId b) const {
  return diff_annotations(revision(a).snapshot, revision(b).snapshot);
}

}  // namespace vtmm
