#include <doctest.h>

#include <thread>

#include <httplib.h>

#include "fixture.hpp"
#include "vtmm/service.hpp"

using namespace vtmm;
using nlohmann::json;

namespace {

json call(Service& s, const std::string& method, const std::string& path, const json& body, int expect = 200) {
  const auto r = s.handle(method, path, body.is_null() ? std::string() : body.dump());
  CHECK_MESSAGE(r.status == expect, method << ' ' << path << " -> " << r.body.dump());
  CHECK(r.body.contains("revision"));
  return r.body;
}

}  // namespace

TEST_SUITE("api") {
  TEST_CASE("routes through handle()") {
    testutil::TempDir dir("api");
    const auto world = testutil::make_world(dir);
    auto service = Service::from_project(world.project);
    auto& s = *service;
    CHECK(s.revision() == 1);

    const auto classes = call(s, "GET", "/v1/classes", nullptr);
    CHECK(classes["classes"].size() == 3);
    CHECK(classes["classes"][0]["class_label"] == "class_00");

    auto annotations = call(s, "GET", "/v1/annotations", nullptr)["annotations"];
    CHECK(annotations["classes"].size() == 3);

    SUBCASE("score") {
      const auto score = call(s, "POST", "/v1/score", {{"video_id", "class_00_v000"}});
      CHECK(score["breakdowns"].size() == 3);
      CHECK(score["breakdowns"][0]["features"][0].contains("degree"));
      const auto one = call(s, "POST", "/v1/score", {{"video_id", "class_00_v000"}, {"class", "class_01"}});
      CHECK(one["breakdowns"].size() == 1);
      call(s, "POST", "/v1/score", {{"video_id", "nope"}}, 404);
      call(s, "POST", "/v1/score", {{"video_id", "class_00_v000"}, {"class", "zzz"}}, 404);
      // Repeated calls give identical bytes.
      CHECK(s.handle("POST", "/v1/score", R"({"video_id":"class_01_v001"})").body.dump() ==
            s.handle("POST", "/v1/score", R"({"video_id":"class_01_v001"})").body.dump());
    }

    SUBCASE("read your writes") {
      annotations["classes"]["class_00"].push_back({{"text", "a bright new feature"}, {"weight", 2.0}, {"kind", "long-sentence"}});
      // Stub-free embedder: an unknown text is refused before anything is recorded.
      call(s, "PUT", "/v1/annotations", annotations, 400);
      CHECK(s.revision() == 1);

      annotations["classes"]["class_00"].back()["text"] = "a video of class_01";
      const auto put = call(s, "PUT", "/v1/annotations", {{"annotations", annotations}, {"note", "edit"}, {"base_revision", 1}});
      CHECK(put["revision"] == 2);
      const auto ev = call(s, "POST", "/v1/evaluate", {{"split", "test"}});
      CHECK(ev["revision"] == 2);
      CHECK(ev["evaluation"]["total"] == 3);
      CHECK(call(s, "GET", "/v1/annotations", nullptr)["annotations"] == annotations);

      // Stale base revision.
      call(s, "PUT", "/v1/annotations", {{"annotations", annotations}, {"base_revision", 1}}, 409);
      const auto revs = call(s, "GET", "/v1/revisions", nullptr);
      CHECK(revs["revisions"].size() == 3);
      CHECK(revs["revisions"][2]["note"] == "edit");
      const auto diff = call(s, "GET", "/v1/revisions/1/diff/2", nullptr);
      CHECK(diff["changes"].size() == 1);
      CHECK(diff["changes"][0]["class_label"] == "class_00");
      call(s, "GET", "/v1/revisions/1/diff/77", nullptr, 404);

      json bad = annotations;
      bad["classes"]["class_00"][0]["weight"] = 0.0;
      const auto rejected = call(s, "PUT", "/v1/annotations", bad, 400);
      CHECK(rejected["error"]["code"] == "ValidationFailed");
      CHECK(rejected["error"]["diagnostics"].size() == 1);
    }

    SUBCASE("correction with lambda 0 reproduces the baseline") {
      const auto r = call(s, "POST", "/v1/correct", {{"lambda", 0.0}});
      CHECK(r["corrected"] == r["baseline"]);
      CHECK(r["lambda"] == 0.0);
      const auto sm = call(s, "POST", "/v1/correct", {{"lambda", 0.0}, {"normalization", "softmax"}});
      CHECK(sm["corrected"] == sm["baseline"]);
      call(s, "POST", "/v1/correct", {{"baseline_ref", "missing.json"}}, 400);
    }

    SUBCASE("malformed requests") {
      CHECK(s.handle("POST", "/v1/score", "{not json").status == 400);
      CHECK(s.handle("GET", "/v1/nothing", "").status == 404);
      CHECK(s.handle("DELETE", "/v1/annotations", "").status == 404);
    }
  }

  TEST_CASE("over HTTP") {
    testutil::TempDir dir("api_http");
    const auto world = testutil::make_world(dir);
    auto service = Service::from_project(world.project);
    httplib::Server server;
    service->attach(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto classes = client.Get("/v1/classes");
    REQUIRE(classes);
    CHECK(classes->status == 200);
    CHECK(json::parse(classes->body)["revision"] == 1);

    auto missing = client.Post("/v1/score", R"({"video_id":"ghost"})", "application/json");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body)["error"]["code"] == "UnknownVideo");

    const auto annotations = json::parse(client.Get("/v1/annotations")->body)["annotations"];
    auto put = client.Put("/v1/annotations", json{{"annotations", annotations}, {"note", "same"}}.dump(), "application/json");
    REQUIRE(put);
    CHECK(put->status == 200);
    CHECK(json::parse(put->body)["revision"] == 2);

    auto stale = client.Put("/v1/annotations", json{{"annotations", annotations}, {"base_revision", 0}}.dump(),
                            "application/json");
    REQUIRE(stale);
    CHECK(stale->status == 409);

    auto ev = client.Post("/v1/evaluate", "{}", "application/json");
    REQUIRE(ev);
    CHECK(json::parse(ev->body)["revision"] == 2);
    CHECK(json::parse(ev->body)["evaluation"]["total"] == 12);

    server.stop();
    worker.join();
  }
}
