#include <doctest.h>

#include <fstream>
#include <thread>

#include "test_util.hpp"
#include "vtmm/dataset.hpp"
#include "vtmm/store.hpp"

using namespace vtmm;
using testutil::error_code_of;

namespace {

AnnotationSet two_classes() {
  AnnotationSet set;
  set.classes["run"] = {{"a person runs", 1.0, "run", FeatureKind::LongSentence}};
  set.classes["swim"] = {{"a person swims", 1.0, "swim", FeatureKind::LongSentence},
                         {"water", 0.5, "swim", FeatureKind::CommonShort}};
  return set;
}

std::string file_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("store") {
  TEST_CASE("fresh project starts at revision 0 and persists") {
    testutil::TempDir dir("store");
    {
      auto p = Project::open_or_init(dir.path());
      CHECK(p.active_revision() == 0);
      CHECK(p.active().snapshot.classes.empty());
      CHECK(p.revisions().size() == 1);
      CHECK(p.commit_annotations(two_classes(), "first") == 1);
    }
    auto reopened = Project::open_or_init(dir.path());
    CHECK(reopened.active_revision() == 1);
    CHECK(reopened.active().snapshot == two_classes());
    CHECK(reopened.active().parent == std::optional<RevisionId>(0));
    CHECK(reopened.active().note == "first");
    CHECK(error_code_of([&] { reopened.revision(99); }) == Errc::UnknownRevision);
  }

  TEST_CASE("edits are isolated and history is append-only") {
    testutil::TempDir dir("store_edit");
    auto p = Project::open_or_init(dir.path());
    p.commit_annotations(two_classes(), "base");
    auto edited = two_classes();
    edited.classes["swim"].push_back({"goggles", 2.0, "swim", FeatureKind::LongSentence});
    const auto r2 = p.commit_annotations(edited, "add");
    CHECK(r2 == 2);
    CHECK(p.revision(2).snapshot.classes.at("run") == p.revision(1).snapshot.classes.at("run"));
    CHECK(p.revision(2).snapshot.classes.at("run").front().text == "a person runs");
    const auto before = file_text(dir / "revisions/0001.json");
    CHECK(p.commit_annotations(edited, "same again") == 3);
    CHECK(p.revisions().size() == 4);
    CHECK(file_text(dir / "revisions/0001.json") == before);
  }

  TEST_CASE("invalid snapshots are rejected with diagnostics") {
    testutil::TempDir dir("store_bad");
    auto p = Project::open_or_init(dir.path());
    auto bad = two_classes();
    bad.classes["run"][0].weight = 0.0;
    try {
      p.commit_annotations(bad, "x");
      FAIL("expected ValidationFailed");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ValidationFailed);
      CHECK(e.diagnostics().size() == 1);
    }
    CHECK(p.active_revision() == 0);
    // Missing class labels are filled from the map key.
    auto unlabeled = two_classes();
    unlabeled.classes["run"][0].class_label.clear();
    CHECK(p.commit_annotations(unlabeled, "fill") == 1);
    CHECK(p.active().snapshot.classes.at("run")[0].class_label == "run");
  }

  TEST_CASE("stale base revision conflicts") {
    testutil::TempDir dir("store_conflict");
    auto a = Project::open_or_init(dir.path());
    auto b = Project::open_or_init(dir.path());
    CHECK(a.commit_annotations(two_classes(), "a", 0) == 1);
    CHECK(error_code_of([&] { b.commit_annotations(two_classes(), "b", 0); }) == Errc::WriteConflict);
    // Without a base the second writer appends after reloading.
    CHECK(b.commit_annotations(two_classes(), "b") == 2);
    CHECK(b.revision(2).parent == std::optional<RevisionId>(1));
  }

  TEST_CASE("concurrent writers never lose a revision") {
    testutil::TempDir dir("store_race");
    Project::open_or_init(dir.path());
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
      threads.emplace_back([&dir, t] {
        auto p = Project::open_or_init(dir.path());
        for (int i = 0; i < 5; ++i) p.commit_annotations(two_classes(), "t" + std::to_string(t));
      });
    }
    for (auto& th : threads) th.join();
    auto p = Project::open_or_init(dir.path());
    CHECK(p.active_revision() == 20);
    CHECK(p.revisions().size() == 21);
  }

  TEST_CASE("corruption is detected") {
    testutil::TempDir dir("store_corrupt");
    {
      auto p = Project::open_or_init(dir.path());
      p.commit_annotations(two_classes(), "x");
    }
    {
      std::ofstream out(dir / "revisions/0001.json", std::ios::trunc);
      out << "{ not json";
    }
    CHECK(error_code_of([&] { Project::open_or_init(dir.path()); }) == Errc::CorruptProject);
  }

  TEST_CASE("config round trip") {
    testutil::TempDir dir("store_cfg");
    auto p = Project::open_or_init(dir.path());
    ProjectConfig cfg;
    cfg.dataset = "data";
    cfg.checkpoint = "model.ckpt";
    cfg.embeddings = "stub";
    cfg.mode = ScoreMode::Subtractive;
    cfg.lambda = 0.25;
    p.set_config(cfg);
    auto q = Project::open_or_init(dir.path());
    CHECK(q.config().mode == ScoreMode::Subtractive);
    CHECK(q.config().lambda == 0.25);
    CHECK(q.resolve("data") == dir.path() / "data");
    CHECK(q.resolve("/abs/x") == std::filesystem::path("/abs/x"));
  }

  TEST_CASE("diff") {
    const auto base = two_classes();
    CHECK(diff_annotations(base, base).empty());

    auto added = base;
    added.classes["swim"].push_back({"goggles", 2.0, "swim", FeatureKind::LongSentence});
    const auto d = diff_annotations(base, added);
    REQUIRE(d.size() == 1);
    CHECK(d[0].class_label == "swim");
    REQUIRE(d[0].added.size() == 1);
    CHECK(d[0].added[0].text == "goggles");
    CHECK(d[0].removed.empty());

    auto reweighted = base;
    reweighted.classes["run"][0].weight = 2.0;
    const auto w = diff_annotations(base, reweighted);
    REQUIRE(w.size() == 1);
    CHECK(w[0].added.empty());
    CHECK(w[0].removed.empty());
    REQUIRE(w[0].weight_changes.size() == 1);
    CHECK(w[0].weight_changes[0].before == 1.0);
    CHECK(w[0].weight_changes[0].after == 2.0);

    const auto back = diff_annotations(added, base);
    REQUIRE(back.size() == 1);
    CHECK(back[0].removed.size() == 1);
    CHECK(diff_to_json(d)[0]["added"][0]["text"] == "goggles");
  }
}
