#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "test_util.hpp"
#include "vtmm/scoring.hpp"

using namespace vtmm;
using testutil::error_code_of;

namespace {

AnnotatedFeature feat(std::string text, double w, std::string cls = "c") {
  return {std::move(text), w, std::move(cls), FeatureKind::LongSentence};
}

ClassScoreBreakdown with_score(std::string label, double s) {
  ClassScoreBreakdown b;
  b.class_label = std::move(label);
  b.s = s;
  return b;
}

const MatchingNetwork& shared_net() {
  static const MatchingNetwork net = MatchingNetwork::initialized(NetDims{}, 31);
  return net;
}

VideoFeature random_video(Rng& rng, const std::string& id) {
  return VideoFeature(id, std::nullopt, testutil::random_vector(rng, kVideoDim));
}

}  // namespace

TEST_SUITE("scoring") {
  TEST_CASE("class score examples") {
    const std::vector<AnnotatedFeature> one{feat("x", 1)};
    const std::vector<double> d08{0.8};
    const auto b = class_score(one, d08, ScoreMode::Literal);
    CHECK(b.s_p == doctest::Approx(0.8));
    CHECK(b.s_n == 0.0);
    CHECK(b.s == doctest::Approx(0.8));

    const std::vector<AnnotatedFeature> w13{feat("x", 1), feat("y", 3)};
    const std::vector<AnnotatedFeature> w26{feat("x", 2), feat("y", 6)};
    const std::vector<double> d{0.4, 0.8};
    CHECK(class_score(w13, d, ScoreMode::Literal).s_p == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(class_score(w26, d, ScoreMode::Literal).s_p == doctest::Approx(0.7).epsilon(1e-14));

    const std::vector<AnnotatedFeature> neg{feat("z", -1)};
    const std::vector<double> d06{0.6};
    const auto lit = class_score(neg, d06, ScoreMode::Literal);
    CHECK(lit.s_p == 0.0);
    CHECK(lit.s_n == doctest::Approx(0.6));
    CHECK(lit.s == doctest::Approx(0.6));
    CHECK(class_score(neg, d06, ScoreMode::Subtractive).s == doctest::Approx(-0.6));

    CHECK(error_code_of([] { class_score({}, {}, ScoreMode::Literal); }) == Errc::NoFeatures);
    CHECK(error_code_of([&] { class_score(w13, d08, ScoreMode::Literal); }) == Errc::DimensionMismatch);
  }

  TEST_CASE("class score agrees with the oracle on random instances") {
    Rng rng(1);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 1 + rng.below(6);
      std::vector<AnnotatedFeature> fs;
      std::vector<double> ds;
      std::vector<oracle::Term> terms;
      for (std::size_t i = 0; i < n; ++i) {
        double w = rng.uniform(0.1, 4.0) * (rng.below(2) ? 1 : -1);
        fs.push_back(feat("f" + std::to_string(i), w));
        ds.push_back(rng.uniform01());
        terms.push_back({w, ds.back()});
      }
      for (auto mode : {ScoreMode::Literal, ScoreMode::Subtractive}) {
        const auto got = class_score(fs, ds, mode).s;
        CHECK(std::abs(got - oracle::class_score(terms, mode == ScoreMode::Subtractive)) < 1e-12);
      }
    }
  }

  TEST_CASE("ranking") {
    std::vector<ClassScoreBreakdown> b{with_score("B", 0.2), with_score("A", 0.9)};
    CHECK(rank(b).front().class_label == "A");
    std::vector<ClassScoreBreakdown> tie{with_score("c", 0.5), with_score("a", 0.5), with_score("b", 0.5)};
    const auto r = rank(tie);
    CHECK(r[0].class_label == "a");
    CHECK(r[1].class_label == "b");
    CHECK(r[2].class_label == "c");
    sort_ranked(tie);
    CHECK(tie[0].class_label == "a");
  }

  TEST_CASE("standalone ranking matches a brute-force recomputation") {
    const auto& net = shared_net();
    const auto embedder = SentenceEmbedder::stub();
    AnnotationSet set;
    set.classes["alpha"] = {feat("a person is swimming", 1, "alpha"), feat("water splashes", 2.5, "alpha"),
                            feat("a person is running", -1, "alpha")};
    set.classes["beta"] = {feat("a person is running", 1, "beta"), feat("outdoor track", 0.5, "beta")};
    set.classes["gamma"] = {feat("a rope and a wall", 3, "gamma"), feat("a person is swimming", -2, "gamma"),
                            feat("water splashes", -0.5, "gamma")};
    Rng rng(2);
    FeatureScorer scorer(net, embedder);
    for (int i = 0; i < 5; ++i) {
      const auto video = random_video(rng, "v" + std::to_string(i));
      for (auto mode : {ScoreMode::Literal, ScoreMode::Subtractive}) {
        std::vector<std::pair<double, std::string>> expected;
        for (const auto& [label, fs] : set.classes) {
          std::vector<oracle::Term> terms;
          for (const auto& f : fs) terms.push_back({f.weight, net.forward(video.values(), embedder.embed(f.text))});
          expected.push_back({-oracle::class_score(terms, mode == ScoreMode::Subtractive), label});
        }
        std::sort(expected.begin(), expected.end());
        const auto ranked = classify_standalone(video, set, net, embedder, mode);
        REQUIRE(ranked.size() == 3);
        for (std::size_t k = 0; k < 3; ++k) {
          CHECK(ranked[k].class_label == expected[k].second);
          CHECK(std::abs(ranked[k].s + expected[k].first) < 1e-12);
        }
        const auto breakdowns = scorer.score(video, set, mode);
        CHECK(rank(breakdowns) == ranked);
      }
    }
    CHECK(scorer.cached_texts() == 5);
    AnnotationSet smaller;
    smaller.classes["beta"] = set.classes["beta"];
    scorer.retain_only(smaller);
    CHECK(scorer.cached_texts() == 2);
  }

  TEST_CASE("correction") {
    const std::map<std::string, double> base{{"a", 0.2}, {"b", 0.6}, {"c", 0.1}};
    const std::map<std::string, double> vtmm{{"a", 0.3}, {"c", 0.9}};
    const auto identity = correct(base, vtmm, 0.0);
    for (const auto& [label, r] : identity) CHECK(r.s_final == base.at(label));
    const auto one = correct(base, vtmm, kDefaultLambda);
    CHECK(kDefaultLambda == 1.0);
    CHECK(one.at("a").s_final == doctest::Approx(0.5));
    CHECK(one.at("b").s_vtmm == 0.0);
    CHECK(one.at("b").s_final == 0.6);
    CHECK(argmax(one) == "c");
    CHECK(argmax(base) == "b");
    CHECK(argmax(std::map<std::string, double>{{"y", 1.0}, {"x", 1.0}}) == "x");
    CHECK(error_code_of([&] { correct(base, {{"zzz", 0.4}}, 1.0); }) == Errc::UnknownClassInVTMM);
    CHECK(error_code_of([] { argmax(std::map<std::string, double>{}); }) == Errc::InvalidArgument);

    const auto sm = softmax({{"a", 1.0}, {"b", 1.0}, {"c", 1000.0}});
    CHECK(sm.at("a") == doctest::Approx(0.0));
    CHECK(sm.at("c") == doctest::Approx(1.0));
    const auto even = softmax({{"a", 2.0}, {"b", 2.0}});
    CHECK(even.at("a") == doctest::Approx(0.5));
  }

  TEST_CASE("evaluation") {
    const std::vector<Prediction> perfect{{"1", "a", "a"}, {"2", "b", "b"}};
    const auto ev = evaluate(perfect);
    CHECK(ev.accuracy == 1.0);
    CHECK(ev.count("a", "a") == 1);
    CHECK(ev.count("a", "b") == 0);

    const std::vector<Prediction> half{{"1", "a", "a"}, {"2", "a", "b"}};
    CHECK(evaluate(half).accuracy == 0.5);

    // Hand tally: truth a: a,a,b,c  truth b: b,b,a  truth c: c,a,c
    const std::vector<Prediction> ten{{"1", "a", "a"}, {"2", "a", "a"}, {"3", "b", "a"}, {"4", "c", "a"},
                                      {"5", "b", "b"}, {"6", "b", "b"}, {"7", "a", "b"}, {"8", "c", "c"},
                                      {"9", "a", "c"}, {"10", "c", "c"}};
    const auto e = evaluate(ten);
    const std::vector<std::vector<std::size_t>> hand{{2, 1, 1}, {1, 2, 0}, {1, 0, 2}};
    CHECK(e.classes == std::vector<std::string>{"a", "b", "c"});
    CHECK(e.confusion == hand);
    CHECK(e.correct == 6);
    CHECK(e.per_class_accuracy.at("a") == doctest::Approx(0.5));
    CHECK(e.per_class_accuracy.at("b") == doctest::Approx(2.0 / 3.0));

    const std::vector<std::string> extra{"zzz"};
    CHECK(evaluate(perfect, extra).classes.size() == 3);
    CHECK(error_code_of([] { evaluate({}); }) == Errc::EmptyEvaluation);
  }

  TEST_CASE("annotation validation and json") {
    AnnotationSet set;
    set.common_features = {{"indoor", 1.0}};
    set.classes["swim"] = {feat("a man swims", 2, "swim"), {"indoor", 1.0, "swim", FeatureKind::CommonShort}};
    CHECK(set.validate().empty());
    CHECK(set.feature_count() == 2);
    CHECK(AnnotationSet::from_json(set.to_json()) == set);

    auto bad = set;
    bad.classes["swim"][0].weight = 0.0;
    bad.classes["swim"][1].text = "  ";
    CHECK(bad.validate().size() == 2);
    CHECK(error_code_of([] { AnnotationSet::from_json(nlohmann::json::array()); }) == Errc::ValidationFailed);
    CHECK(error_code_of([] {
            AnnotationSet::from_json(nlohmann::json::parse(R"({"classes": {"x": [{"weight": 1}]}})"));
          }) == Errc::ValidationFailed);
    CHECK(error_code_of([] {
            AnnotationSet::from_json(nlohmann::json::parse(R"({"classes": {"x": [{"text": "t", "kind": "odd"}]}})"));
          }) == Errc::ValidationFailed);
    CHECK(parse_score_mode("subtractive") == ScoreMode::Subtractive);
    CHECK(error_code_of([] { parse_score_mode("other"); }) == Errc::InvalidArgument);
  }
}
