#include "vtmm/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "vtmm/dataset.hpp"
#include "vtmm/error.hpp"
#include "vtmm/gradcheck.hpp"
#include "vtmm/log.hpp"
#include "vtmm/net.hpp"
#include "vtmm/pairs.hpp"
#include "vtmm/report.hpp"
#include "vtmm/rng.hpp"
#include "vtmm/scoring.hpp"
#include "vtmm/service.hpp"
#include "vtmm/store.hpp"

namespace vtmm::cli {

namespace fs = std::filesystem;

namespace {

int exit_code_for(Errc code) {
  switch (category(code)) {
    case ErrorCategory::Validation: return kValidation;
    case ErrorCategory::Io: return kIo;
    case ErrorCategory::Contract: return kContract;
    case ErrorCategory::NotFound: return kNotFound;
    case ErrorCategory::Conflict: return kConflict;
  }
  return kInternal;
}

void report_error(std::ostream& err, const std::string& code, const std::string& message,
                  const std::vector<std::string>& diagnostics = {}) {
  err << nlohmann::json{{"error", {{"code", code}, {"message", message}, {"diagnostics", diagnostics}}}}.dump()
      << '\n';
}

void write_output(const nlohmann::json& doc, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << doc.dump(1) << '\n';
  } else {
    write_json_file(path, doc);
  }
}

// Flags shared by the scoring subcommands.
struct Sources {
  std::string project;
  std::string dataset;
  std::string annotations;
  std::string checkpoint;
  std::string embeddings;
  std::int64_t revision = -1;
  std::string mode;
  std::optional<double> lambda;
  std::string normalize;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--project", project, "Project directory");
    cmd.add_option("--dataset", dataset, "Dataset directory (overrides the project's)");
    cmd.add_option("--annotations", annotations, "Annotation file (without a project)");
    cmd.add_option("--checkpoint", checkpoint, "Network checkpoint (overrides the project's)");
    cmd.add_option("--embeddings", embeddings, "Sentence-vector JSON or 'stub'");
    cmd.add_option("--revision", revision, "Annotation revision (project only; default active)");
    cmd.add_option("--mode", mode, "literal | subtractive")->check(CLI::IsMember({"literal", "subtractive"}));
  }
};

struct Workspace {
  std::optional<Project> project;
  Dataset dataset;
  MatchingNetwork net;
  SentenceEmbedder embedder;
  AnnotationSet annotations;
  RevisionId revision = 0;
  ScoreMode mode = ScoreMode::Literal;
  double lambda = kDefaultLambda;
  BaselineNormalization normalization = BaselineNormalization::None;
  std::size_t top_k = 3;
};

SentenceEmbedder embedder_from(const std::string& spec, const fs::path& dataset_root) {
  if (spec == "stub") return SentenceEmbedder::stub();
  if (!spec.empty()) return SentenceEmbedder::load_precomputed(spec);
  const fs::path fallback = dataset_root / kSentenceVectorsFile;
  if (fs::exists(fallback)) return SentenceEmbedder::load_precomputed(fallback);
  return SentenceEmbedder::stub();
}

Workspace open_workspace(const Sources& s) {
  Workspace ws;
  if (!s.project.empty()) {
    if (!s.annotations.empty()) {
      throw Error(Errc::InvalidArgument, "--annotations conflicts with --project; commit it with 'revisions commit'");
    }
    ws.project = Project::open_or_init(s.project);
    const Project& p = *ws.project;
    const auto& cfg = p.config();
    const fs::path dataset = s.dataset.empty() ? p.resolve(cfg.dataset) : fs::path(s.dataset);
    const fs::path checkpoint = s.checkpoint.empty() ? p.resolve(cfg.checkpoint) : fs::path(s.checkpoint);
    if (dataset.empty() || checkpoint.empty()) {
      throw Error(Errc::InvalidArgument, "project has no dataset/checkpoint; run 'revisions configure' first");
    }
    ws.dataset = Dataset::load(dataset);
    ws.net = load_checkpoint(checkpoint);
    ws.embedder = s.embeddings.empty() ? load_embedder(p) : embedder_from(s.embeddings, dataset);
    ws.revision = s.revision >= 0 ? s.revision : p.active_revision();
    ws.annotations = p.revision(ws.revision).snapshot;
    ws.mode = cfg.mode;
    ws.lambda = cfg.lambda;
    ws.normalization = cfg.normalization;
    ws.top_k = cfg.top_k;
  } else {
    if (s.dataset.empty() || s.checkpoint.empty()) {
      throw Error(Errc::InvalidArgument, "need --project, or --dataset and --checkpoint");
    }
    if (s.revision >= 0) throw Error(Errc::InvalidArgument, "--revision needs --project");
    ws.dataset = Dataset::load(s.dataset);
    ws.net = load_checkpoint(s.checkpoint);
    ws.embedder = embedder_from(s.embeddings, s.dataset);
    ws.annotations = AnnotationSet::load(s.annotations.empty() ? fs::path(s.dataset) / kAnnotationsFile
                                                               : fs::path(s.annotations));
  }
  ws.net.set_dropout_rate(0.0);
  if (!s.mode.empty()) ws.mode = parse_score_mode(s.mode);
  if (s.lambda) ws.lambda = *s.lambda;
  if (!s.normalize.empty()) ws.normalization = parse_normalization(s.normalize);
  return ws;
}

int cmd_synth(const SynthConfig& cfg, const std::string& out_dir, std::ostream& out) {
  const SynthDataset data = synth_dataset(cfg);
  write_synth_dataset(out_dir, data, cfg.seed);
  std::size_t captions = 0;
  for (const auto& cv : data.captions) captions += cv.captions.size();
  out << nlohmann::json{{"dataset", out_dir},
                        {"classes", data.class_labels.size()},
                        {"videos", data.videos.size()},
                        {"captions", captions}}
             .dump()
      << '\n';
  return kOk;
}

struct IngestOptions {
  std::string dataset;
  std::string words;
  std::string hierarchy;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

int cmd_ingest(const IngestOptions& o, std::ostream& out) {
  const fs::path root(o.dataset);
  const fs::path features = root / "features";
  if (!fs::is_directory(features)) throw Error(Errc::Io, features.string() + " is not a directory");

  std::optional<WordEmbeddingTable> words;
  std::optional<LabelHierarchy> hierarchy;
  if (!o.words.empty()) words = WordEmbeddingTable::load_glove(o.words);
  if (!o.hierarchy.empty()) hierarchy = LabelHierarchy::load_json(o.hierarchy);
  const AssemblyContext ctx{words ? &*words : nullptr, hierarchy ? &*hierarchy : nullptr};

  std::map<std::string, std::string> known_split;
  if (fs::exists(root / kIndexFile)) {
    for (const auto& e : load_index(root)) known_split[e.video_id] = e.split;
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(features)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<IndexEntry> index;
  std::set<std::string> ids;
  std::size_t assembled = 0;
  for (const auto& file : files) {
    const auto doc = read_json_file(file);
    VideoFeature v;
    try {
      v = parse_feature_document(doc, ctx);
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.what(), e.diagnostics());
    }
    if (!ids.insert(v.video_id()).second) throw Error(Errc::InvalidArgument, "duplicate video id '" + v.video_id() + "'");
    std::string rel = fs::relative(file, root).generic_string();
    if (doc.contains("raw")) {
      rel = "assembled/" + v.video_id() + ".json";
      write_json_file(root / rel, assembled_feature_document(v));
      ++assembled;
    }
    std::string split;
    if (auto it = known_split.find(v.video_id()); it != known_split.end() && !it->second.empty()) {
      split = it->second;
    } else {
      Rng rng(derive_seed(o.seed, fnv1a64(v.video_id())));
      split = rng.uniform01() < o.test_fraction ? "test" : "train";
    }
    index.push_back({v.video_id(), v.class_label().value_or(""), rel, split});
  }
  write_index(root, index);
  out << nlohmann::json{{"dataset", o.dataset}, {"videos", index.size()}, {"assembled_from_raw", assembled}}.dump()
      << '\n';
  return kOk;
}

struct TrainOptions {
  std::string dataset;
  std::string captions;
  std::string embeddings;
  std::string checkpoint;
  std::string loss_csv;
  std::string preset = "desk";
  std::string split = "train";
  std::string projection_activation = "relu";
  std::uint64_t seed = 0;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch;
  std::optional<double> dropout;
};

int cmd_train(const TrainOptions& o, std::ostream& out) {
  TrainConfig cfg = o.preset == "paper" ? TrainConfig::paper() : TrainConfig::desk();
  const bool overrides = o.epochs || o.lr || o.batch || o.dropout;
  if (overrides && o.preset != "custom") {
    throw Error(Errc::InvalidArgument, "--epochs/--lr/--batch-size/--dropout need --preset custom");
  }
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.lr) cfg.learning_rate = *o.lr;
  if (o.batch) cfg.batch_size = *o.batch;
  if (o.dropout) cfg.dropout = *o.dropout;
  cfg.seed = o.seed;

  const fs::path root(o.dataset);
  const Dataset dataset = Dataset::load(root);
  const SentenceEmbedder embedder = embedder_from(o.embeddings, root);
  auto captions = load_captions(o.captions.empty() ? root / kCaptionsFile : fs::path(o.captions));

  std::set<std::string> in_split;
  for (const auto& e : dataset.index()) {
    if (o.split == "all" || e.split == o.split) in_split.insert(e.video_id);
  }
  std::erase_if(captions, [&](const CaptionedVideo& cv) { return !in_split.contains(cv.video_id); });
  for (const auto& cv : captions) {
    if (!dataset.find(cv.video_id)) throw Error(Errc::UnknownVideo, "captioned video '" + cv.video_id + "' not in dataset");
  }

  const auto pairs = build_training_pairs(captions, cfg.seed);
  std::map<std::string, Vector> text_vectors;
  for (const auto& p : pairs) {
    if (!text_vectors.contains(p.text)) text_vectors.emplace(p.text, embedder.embed(p.text));
  }
  std::vector<TrainingExample> examples;
  examples.reserve(pairs.size());
  for (const auto& p : pairs) {
    examples.push_back({dataset.find(p.video_id)->values(), text_vectors.at(p.text), p.label});
  }

  NetDims dims;
  dims.projection_activation = o.projection_activation == "identity" ? Activation::Identity : Activation::Relu;
  MatchingNetwork net = MatchingNetwork::initialized(dims, cfg.seed, cfg.dropout);
  const TrainResult result = train(net, examples, cfg, [](std::size_t epoch, double loss) {
    spdlog::info("epoch {} loss {:.6f}", epoch, loss);
  });
  save_checkpoint(net, o.checkpoint);

  const std::string csv_path = o.loss_csv.empty() ? o.checkpoint + ".loss.csv" : o.loss_csv;
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw Error(Errc::Io, "cannot write " + csv_path);
  csv << "epoch,mean_loss\n";
  csv.precision(17);
  for (std::size_t i = 0; i < result.epoch_loss.size(); ++i) csv << i + 1 << ',' << result.epoch_loss[i] << '\n';

  out << nlohmann::json{{"checkpoint", o.checkpoint},
                        {"pairs", examples.size()},
                        {"epochs", cfg.epochs},
                        {"initial_loss", result.epoch_loss.front()},
                        {"final_loss", result.epoch_loss.back()},
                        {"loss_csv", csv_path}}
             .dump()
      << '\n';
  return kOk;
}

int cmd_gradcheck(const GradCheckConfig& cfg, double tolerance, std::ostream& out) {
  const auto r = gradient_check(cfg);
  out << nlohmann::json{{"trials", r.trials},
                        {"parameters_checked", r.parameters_checked},
                        {"max_relative_error", r.max_relative_error},
                        {"tolerance", tolerance}}
             .dump()
      << '\n';
  return r.max_relative_error < tolerance && r.trials == cfg.trials ? kOk : kGradCheckFailed;
}

int cmd_classify(const Sources& s, const std::string& video_id, std::size_t top, bool json, std::ostream& out) {
  Workspace ws = open_workspace(s);
  const VideoFeature* video = ws.dataset.find(video_id);
  if (!video) throw Error(Errc::UnknownVideo, "unknown video '" + video_id + "'");
  FeatureScorer scorer(ws.net, ws.embedder);
  const auto breakdowns = scorer.score(*video, ws.annotations, ws.mode);
  const auto ranked = rank(breakdowns);
  if (json) {
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t i = 0; i < std::min(top, ranked.size()); ++i) {
      list.push_back({{"class_label", ranked[i].class_label}, {"s", ranked[i].s}});
    }
    out << nlohmann::json{{"revision", ws.revision}, {"video_id", video_id}, {"ranking", list}}.dump(1) << '\n';
  } else {
    for (std::size_t i = 0; i < std::min(top, ranked.size()); ++i) {
      out << i + 1 << '\t' << ranked[i].class_label << '\t' << ranked[i].s << '\n';
    }
  }
  return kOk;
}

int cmd_eval(const Sources& s, const std::string& split, const std::string& out_path, bool text, std::ostream& out) {
  Workspace ws = open_workspace(s);
  FeatureScorer scorer(ws.net, ws.embedder);
  const auto videos = ws.dataset.select(split);
  const auto report = evaluation_report(scorer, videos, ws.annotations, {ws.mode, ws.top_k, ws.revision});
  write_output(report, out_path, out);
  if (text) out << render_evaluation_text(report.at("evaluation"));
  return kOk;
}

int cmd_correct(const Sources& s, const std::string& baseline_path, const std::string& split,
                const std::string& out_path, bool text, std::ostream& out) {
  Workspace ws = open_workspace(s);
  FeatureScorer scorer(ws.net, ws.embedder);
  const fs::path baseline_file = baseline_path.empty() ? ws.dataset.root() / kBaselineFile : fs::path(baseline_path);
  const auto baseline = load_baseline_scores(baseline_file);
  const auto videos = ws.dataset.select(split);
  const auto report = correction_report(scorer, videos, ws.annotations, baseline, ws.lambda, ws.normalization,
                                        {ws.mode, ws.top_k, ws.revision});
  write_output(report, out_path, out);
  if (text) {
    out << "baseline:\n" << render_evaluation_text(report.at("baseline"));
    out << "corrected (lambda " << ws.lambda << "):\n" << render_evaluation_text(report.at("corrected"));
  }
  return kOk;
}

int cmd_serve(const std::string& project, const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::InvalidArgument, "--bind must be host:port");
  const std::string host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "bad port in --bind '" + bind + "'");
  }
  auto service = Service::from_project(project);
  serve(*service, host, port);
  return kOk;
}

struct RevisionsOptions {
  std::string project;
  std::vector<std::string> action;
  std::string note;
  std::optional<std::int64_t> base;
  // configure
  std::string dataset, checkpoint, embeddings, mode, normalize;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> top_k;
};

std::int64_t parse_id(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "bad revision id '" + s + "'");
  }
}

int cmd_revisions(const RevisionsOptions& o, std::ostream& out) {
  Project project = Project::open_or_init(o.project);
  const std::string verb = o.action.empty() ? "list" : o.action.front();
  auto need_args = [&](std::size_t n) {
    const std::size_t given = o.action.empty() ? 0 : o.action.size() - 1;
    if (given != n) {
      throw Error(Errc::InvalidArgument, "'revisions " + verb + "' takes " + std::to_string(n) + " argument(s)");
    }
  };
  if (verb == "list") {
    need_args(0);
    for (const auto& r : project.revisions()) {
      out << (r.id == project.active_revision() ? "* " : "  ") << r.id << '\t'
          << (r.parent ? std::to_string(*r.parent) : std::string("-")) << '\t' << r.timestamp << '\t'
          << r.snapshot.feature_count() << " features\t" << r.note << '\n';
    }
  } else if (verb == "show") {
    need_args(1);
    out << project.revision(parse_id(o.action[1])).snapshot.to_json().dump(1) << '\n';
  } else if (verb == "diff") {
    need_args(2);
    const auto a = parse_id(o.action[1]);
    const auto b = parse_id(o.action[2]);
    out << nlohmann::json{{"from", a}, {"to", b}, {"changes", diff_to_json(project.diff(a, b))}}.dump(1) << '\n';
  } else if (verb == "commit") {
    need_args(1);
    const auto snapshot = AnnotationSet::load(o.action[1]);
    const auto id = project.commit_annotations(snapshot, o.note, o.base);
    out << nlohmann::json{{"revision", id}}.dump() << '\n';
  } else if (verb == "configure") {
    need_args(0);
    ProjectConfig cfg = project.config();
    if (!o.dataset.empty()) cfg.dataset = fs::absolute(o.dataset).string();
    if (!o.checkpoint.empty()) cfg.checkpoint = fs::absolute(o.checkpoint).string();
    if (!o.embeddings.empty()) cfg.embeddings = o.embeddings == "stub" ? o.embeddings : fs::absolute(o.embeddings).string();
    if (!o.mode.empty()) cfg.mode = parse_score_mode(o.mode);
    if (!o.normalize.empty()) cfg.normalization = parse_normalization(o.normalize);
    if (o.lambda) cfg.lambda = *o.lambda;
    if (o.seed) cfg.seed = *o.seed;
    if (o.top_k) cfg.top_k = *o.top_k;
    project.set_config(cfg);
    out << cfg.to_json().dump(1) << '\n';
  } else {
    throw Error(Errc::InvalidArgument, "unknown revisions action '" + verb + "' (list|show|diff|commit|configure)");
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  init_logging();
  CLI::App app{"Video-text matching workbench for zero-shot action recognition", "vtmm"};
  app.require_subcommand(1);

  SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--classes", synth_cfg.classes, "Number of classes");
  synth->add_option("--videos-per-class", synth_cfg.videos_per_class);
  synth->add_option("--captions-per-video", synth_cfg.captions_per_video);
  synth->add_option("--noise", synth_cfg.feature_noise, "Gaussian noise scale");
  synth->add_option("--test-fraction", synth_cfg.test_fraction);
  synth->add_option("--seed", synth_cfg.seed);

  IngestOptions ingest_opts;
  auto* ingest = app.add_subcommand("ingest", "Validate feature files, assemble raw ones, write index.json");
  ingest->add_option("--dataset", ingest_opts.dataset)->required();
  ingest->add_option("--words", ingest_opts.words, "GloVe-format word vectors (for raw files)");
  ingest->add_option("--hierarchy", ingest_opts.hierarchy, "Label hierarchy JSON (for raw files)");
  ingest->add_option("--test-fraction", ingest_opts.test_fraction);
  ingest->add_option("--seed", ingest_opts.seed);

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Pretrain the matching network");
  train_cmd->add_option("--dataset", train_opts.dataset)->required();
  train_cmd->add_option("--captions", train_opts.captions);
  train_cmd->add_option("--embeddings", train_opts.embeddings, "Sentence-vector JSON or 'stub'");
  train_cmd->add_option("--checkpoint", train_opts.checkpoint, "Output checkpoint")->required();
  train_cmd->add_option("--loss-csv", train_opts.loss_csv);
  train_cmd->add_option("--preset", train_opts.preset)->check(CLI::IsMember({"paper", "desk", "custom"}));
  train_cmd->add_option("--split", train_opts.split, "train | test | all");
  train_cmd->add_option("--projection-activation", train_opts.projection_activation)
      ->check(CLI::IsMember({"relu", "identity"}));
  train_cmd->add_option("--seed", train_opts.seed);
  train_cmd->add_option("--epochs", train_opts.epochs);
  train_cmd->add_option("--lr", train_opts.lr);
  train_cmd->add_option("--batch-size", train_opts.batch);
  train_cmd->add_option("--dropout", train_opts.dropout);

  GradCheckConfig gc_cfg;
  double gc_tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Check backprop against central differences");
  gradcheck->add_option("--trials", gc_cfg.trials);
  gradcheck->add_option("--seed", gc_cfg.seed);
  gradcheck->add_option("--step", gc_cfg.step);
  gradcheck->add_option("--tolerance", gc_tolerance);

  Sources classify_src;
  std::string classify_video;
  std::size_t classify_top = 5;
  bool classify_json = false;
  auto* classify = app.add_subcommand("classify", "Rank classes for one video");
  classify_src.add_to(*classify);
  classify->add_option("--video", classify_video)->required();
  classify->add_option("--top", classify_top);
  classify->add_flag("--json", classify_json);

  Sources eval_src;
  std::string eval_split = "all", eval_out;
  bool eval_text = false;
  auto* eval = app.add_subcommand("eval", "Standalone evaluation report");
  eval_src.add_to(*eval);
  eval->add_option("--split", eval_split);
  eval->add_option("--out", eval_out, "Report path (default stdout)");
  eval->add_flag("--text", eval_text, "Also print a confusion table");

  Sources correct_src;
  std::string correct_baseline, correct_split = "all", correct_out;
  bool correct_text = false;
  double correct_lambda = kDefaultLambda;
  auto* correct_cmd = app.add_subcommand("correct", "Correct baseline scores with VTMM scores");
  correct_src.add_to(*correct_cmd);
  auto* lambda_opt = correct_cmd->add_option("--lambda", correct_lambda, "Correction factor (default 1)");
  correct_cmd->add_option("--normalize", correct_src.normalize, "none | softmax")
      ->check(CLI::IsMember({"none", "softmax"}));
  correct_cmd->add_option("--baseline", correct_baseline, "Baseline scores JSON");
  correct_cmd->add_option("--split", correct_split);
  correct_cmd->add_option("--out", correct_out);
  correct_cmd->add_flag("--text", correct_text);

  std::string serve_project, serve_bind = "127.0.0.1:8080";
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP API");
  serve_cmd->add_option("--project", serve_project)->required();
  serve_cmd->add_option("--bind", serve_bind, "host:port");

  RevisionsOptions rev_opts;
  auto* revisions = app.add_subcommand("revisions", "list | show ID | diff A B | commit FILE | configure");
  revisions->add_option("--project", rev_opts.project)->required();
  revisions->add_option("action", rev_opts.action);
  revisions->add_option("--note", rev_opts.note);
  revisions->add_option("--base", rev_opts.base, "Expected active revision for commit");
  revisions->add_option("--dataset", rev_opts.dataset);
  revisions->add_option("--checkpoint", rev_opts.checkpoint);
  revisions->add_option("--embeddings", rev_opts.embeddings);
  revisions->add_option("--mode", rev_opts.mode);
  revisions->add_option("--normalize", rev_opts.normalize);
  revisions->add_option("--lambda", rev_opts.lambda);
  revisions->add_option("--seed", rev_opts.seed);
  revisions->add_option("--top-k", rev_opts.top_k);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    report_error(err, "Usage", e.what());
    return kValidation;
  }

  try {
    if (*synth) return cmd_synth(synth_cfg, synth_out, out);
    if (*ingest) return cmd_ingest(ingest_opts, out);
    if (*train_cmd) return cmd_train(train_opts, out);
    if (*gradcheck) return cmd_gradcheck(gc_cfg, gc_tolerance, out);
    if (*classify) return cmd_classify(classify_src, classify_video, classify_top, classify_json, out);
    if (*eval) return cmd_eval(eval_src, eval_split, eval_out, eval_text, out);
    if (*correct_cmd) {
      if (lambda_opt->count() > 0) correct_src.lambda = correct_lambda;
      return cmd_correct(correct_src, correct_baseline, correct_split, correct_out, correct_text, out);
    }
    if (*serve_cmd) return cmd_serve(serve_project, serve_bind);
    if (*revisions) return cmd_revisions(rev_opts, out);
  } catch (const Error& e) {
    report_error(err, to_string(e.code()), e.what(), e.diagnostics());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error(err, "Internal", e.what());
    return kInternal;
  }
  return kInternal;
}

}  // namespace vtmm::cli
