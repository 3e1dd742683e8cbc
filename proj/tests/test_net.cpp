#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "test_util.hpp"
#include "vtmm/net.hpp"

using namespace vtmm;
using testutil::error_code_of;

namespace {

NetDims toy_dims(std::size_t v = 2, std::size_t t = 2) {
  NetDims d;
  d.video_in = v;
  d.text_in = t;
  d.projection = 1;
  d.head = {1, 1, 1};
  return d;
}

// Hand-set 1-unit network.
MatchingNetwork hand_net() {
  MatchingNetwork net(toy_dims());
  auto& vp = net.mutable_layer(0);
  vp.weights = {0.5, -1.0};
  vp.bias = {0.1};
  auto& tp = net.mutable_layer(1);
  tp.weights = {1.0, 2.0};
  tp.bias = {0.0};
  net.mutable_layer(2).weights = {2.0};
  net.mutable_layer(2).bias = {0.5};
  net.mutable_layer(3).weights = {-1.0};
  net.mutable_layer(3).bias = {1.0};
  net.mutable_layer(4).weights = {3.0};
  net.mutable_layer(4).bias = {-0.5};
  return net;
}

NetDims small_dims() {
  NetDims d;
  d.video_in = 6;
  d.text_in = 5;
  d.projection = 4;
  d.head = {3, 2, 1};
  return d;
}

}  // namespace

TEST_SUITE("net") {
  TEST_CASE("zero network outputs exactly one half") {
    MatchingNetwork net(small_dims());
    CHECK(net.forward(Vector(6, 3.0), Vector(5, -2.0)) == 0.5);
  }

  TEST_CASE("hand-computed toy network") {
    // v=[2,0.5]: 1 - 0.5 + 0.1 = 0.6;  t=[0.3,0.1]: 0.5;  fused 0.3
    // head: 2*0.3+0.5 = 1.1 -> -1.1+1 = -0.1 -> relu 0 -> 3*0-0.5 = -0.5
    const auto net = hand_net();
    CHECK(net.forward(Vector{2, 0.5}, Vector{0.3, 0.1}) == doctest::Approx(0.3775406687981454).epsilon(1e-15));
    CHECK(oracle::predict(oracle::copy_layers(net), true, {2, 0.5}, {0.3, 0.1}) ==
          doctest::Approx(0.3775406687981454).epsilon(1e-15));
  }

  TEST_CASE("output stays inside (0,1) and matches the oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const auto net = MatchingNetwork::initialized(small_dims(), 100 + trial);
      const Vector v = testutil::random_vector(rng, 6, -50, 50), t = testutil::random_vector(rng, 5, -50, 50);
      const double p = net.forward(v, t);
      CHECK(p > 0.0);
      CHECK(p < 1.0);
      const double ref = oracle::predict(oracle::copy_layers(net), true, v, t);
      if (ref > 1e-300 && ref < 1 - 1e-15) CHECK(std::abs(p - ref) <= 1e-12 * std::max(1.0, ref));
    }
  }

  TEST_CASE("forward equals projected composition and batch forward") {
    Rng rng(8);
    const auto net = MatchingNetwork::initialized(small_dims(), 1);
    const Vector v = testutil::random_vector(rng, 6), t = testutil::random_vector(rng, 5);
    CHECK(net.forward(v, t) == net.score_projected(net.project_video(v), net.project_text(t)));
    Vector vs = v, ts = t;
    vs.insert(vs.end(), v.begin(), v.end());
    ts.insert(ts.end(), t.begin(), t.end());
    const Vector batch = net.forward_batch(vs, ts, 2);
    CHECK(batch[0] == net.forward(v, t));
    CHECK(batch[1] == batch[0]);
    CHECK(error_code_of([&] { net.forward(Vector(5), t); }) == Errc::DimensionMismatch);
  }

  TEST_CASE("loss values") {
    CHECK(bce_loss(0.5, 1) == doctest::Approx(std::log(2.0)));
    CHECK(bce_loss(0.9, 0) == doctest::Approx(2.302585092994046));
    CHECK(bce_loss(1.0, 1) == doctest::Approx(1e-7).epsilon(1e-3));
    CHECK(bce_loss(0.0, 0) < 1e-6);
    CHECK(std::isfinite(bce_loss(0.0, 1)));
    CHECK(bce_loss(0.0, 1) == doctest::Approx(-std::log(1e-7)));
  }

  TEST_CASE("backward agrees with central differences on a 10-parameter net") {
    MatchingNetwork net(toy_dims(1, 1));
    net.mutable_layer(0).weights = {0.8};
    net.mutable_layer(0).bias = {0.3};
    net.mutable_layer(1).weights = {-0.6};
    net.mutable_layer(1).bias = {0.9};
    net.mutable_layer(2).weights = {1.5};
    net.mutable_layer(2).bias = {0.2};
    net.mutable_layer(3).weights = {0.7};
    net.mutable_layer(3).bias = {0.1};
    net.mutable_layer(4).weights = {-1.2};
    net.mutable_layer(4).bias = {0.4};
    CHECK(net.dims().parameter_count() == 10);
    CHECK(oracle::max_gradient_error(net, {0.5, 1.0}, {0.2, -0.4}, {1, 0}, nullptr) < 1e-4);
  }

  TEST_CASE("backward agrees with central differences with dropout and both activations") {
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
      NetDims d = small_dims();
      if (trial % 2) d.projection_activation = Activation::Identity;
      auto net = MatchingNetwork::initialized(d, 7 + trial, 0.3);
      oracle::randomize_biases(net, rng);
      const std::size_t batch = 3;
      Vector v, t;
      DropoutMasks masks;
      do {
        v = testutil::random_vector(rng, batch * 6);
        t = testutil::random_vector(rng, batch * 5);
        masks = net.sample_masks(batch, rng);
      } while (!oracle::away_from_kinks(net, v, t, batch, &masks));
      CHECK(oracle::max_gradient_error(net, v, t, {1, 0, 1}, &masks) < 1e-4);
    }
  }

  TEST_CASE("dropped unit receives no upstream gradient") {
    const auto net = MatchingNetwork::initialized(small_dims(), 3, 0.5);
    Rng rng(4);
    const Vector v = testutil::random_vector(rng, 6), t = testutil::random_vector(rng, 5);
    DropoutMasks masks;
    masks.video = Vector(4, 2.0);
    masks.text = Vector(4, 2.0);
    masks.head = {Vector(3, 2.0), Vector(2, 2.0)};
    masks.video[1] = 0.0;
    masks.head[0][2] = 0.0;
    const auto cache = net.forward_train(v, t, 1, &masks);
    const std::vector<int> label{1};
    const auto g = net.backward(cache, label);
    for (std::size_t i = 0; i < 6; ++i) CHECK(g.layers[0].weight(1, i) == 0.0);
    CHECK(g.layers[0].bias[1] == 0.0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(g.layers[2].weight(2, i) == 0.0);
    CHECK(g.layers[2].bias[2] == 0.0);
  }

  TEST_CASE("perfect prediction gives a near-zero gradient") {
    auto net = hand_net();
    net.mutable_layer(4).bias = {60.0};  // saturates towards 1
    const auto cache = net.forward_train(Vector{2, 0.5}, Vector{0.3, 0.1}, 1, nullptr);
    const std::vector<int> label{1};
    const auto g = net.backward(cache, label);
    for (const auto& l : g.layers) {
      for (double x : l.weights) CHECK(std::abs(x) < 1e-6);
      for (double x : l.bias) CHECK(std::abs(x) < 1e-6);
    }
  }

  TEST_CASE("stale caches are rejected") {
    auto net = MatchingNetwork::initialized(small_dims(), 2);
    const auto cache = net.forward_train(Vector(6, 0.1), Vector(5, 0.2), 1, nullptr);
    const std::vector<int> label{0};
    net.sgd_step(net.zero_gradient(), 0.1);
    CHECK(error_code_of([&] { net.backward(cache, label); }) == Errc::StaleCache);
    const auto other = MatchingNetwork::initialized(small_dims(), 2);
    CHECK(error_code_of([&] { other.backward(cache, label); }) == Errc::StaleCache);
  }

  TEST_CASE("sgd arithmetic") {
    NetDims d = toy_dims(1, 1);
    MatchingNetwork net(d);
    net.mutable_layer(0).weights = {1.0};
    auto g = net.zero_gradient();
    g.layers[0].weights = {0.5};
    net.sgd_step(g, 0.5);
    CHECK(net.layers()[0].weights[0] == 0.75);
    auto before = oracle::copy_layers(net);
    net.sgd_step(g, 0.0);
    CHECK(oracle::copy_layers(net)[0].w == before[0].w);
  }

  TEST_CASE("two steps differ from one step with the summed gradient on a nonlinear loss") {
    NetDims d = small_dims();
    d.projection_activation = Activation::Identity;
    auto a = MatchingNetwork::initialized(d, 9);
    Rng rng(10);
    oracle::randomize_biases(a, rng);
    auto b = a;
    const Vector v = testutil::random_vector(rng, 6), t = testutil::random_vector(rng, 5);
    const std::vector<int> label{1};
    const double lr = 0.5;

    // Both gradients of the one-step variant are taken at the starting point.
    const auto g1 = a.backward(a.forward_train(v, t, 1, nullptr), label);
    a.sgd_step(g1, lr);
    const auto g2 = a.backward(a.forward_train(v, t, 1, nullptr), label);
    a.sgd_step(g2, lr);

    auto sum = g1;
    for (std::size_t l = 0; l < sum.layers.size(); ++l) {
      for (std::size_t i = 0; i < sum.layers[l].weights.size(); ++i) sum.layers[l].weights[i] += g1.layers[l].weights[i];
      for (std::size_t i = 0; i < sum.layers[l].bias.size(); ++i) sum.layers[l].bias[i] += g1.layers[l].bias[i];
    }
    b.sgd_step(sum, lr);
    double diff = 0;
    for (std::size_t l = 0; l < a.layers().size(); ++l) {
      for (std::size_t i = 0; i < a.layers()[l].weights.size(); ++i) {
        diff = std::max(diff, std::abs(a.layers()[l].weights[i] - b.layers()[l].weights[i]));
      }
      for (std::size_t i = 0; i < a.layers()[l].bias.size(); ++i) {
        diff = std::max(diff, std::abs(a.layers()[l].bias[i] - b.layers()[l].bias[i]));
      }
    }
    CHECK(diff > 1e-6);
  }

  TEST_CASE("training") {
    Rng rng(12);
    const std::size_t n = 40;
    std::vector<Vector> videos, texts;
    std::vector<int> labels;
    const Vector proto_v = testutil::random_vector(rng, 6), proto_t = testutil::random_vector(rng, 5);
    for (std::size_t i = 0; i < n; ++i) {
      const int y = static_cast<int>(i % 2);
      Vector v = testutil::random_vector(rng, 6, -0.1, 0.1), t = testutil::random_vector(rng, 5, -0.1, 0.1);
      for (std::size_t j = 0; j < 6; ++j) v[j] += y ? proto_v[j] : -proto_v[j];
      for (std::size_t j = 0; j < 5; ++j) t[j] += proto_t[j];
      videos.push_back(v);
      texts.push_back(t);
      labels.push_back(y);
    }
    std::vector<TrainingExample> examples;
    for (std::size_t i = 0; i < n; ++i) examples.push_back({videos[i], texts[i], labels[i]});

    SUBCASE("lr 0 is a no-op") {
      auto net = MatchingNetwork::initialized(small_dims(), 1);
      const auto before = oracle::copy_layers(net);
      TrainConfig cfg;
      cfg.learning_rate = 0;
      cfg.epochs = 1;
      const auto r = train(net, examples, cfg);
      CHECK(r.epoch_loss.size() == 1);
      const auto after = oracle::copy_layers(net);
      for (std::size_t l = 0; l < before.size(); ++l) {
        CHECK(before[l].w == after[l].w);
        CHECK(before[l].b == after[l].b);
      }
    }
    SUBCASE("loss decreases") {
      auto net = MatchingNetwork::initialized(small_dims(), 1);
      TrainConfig cfg;
      cfg.epochs = 60;
      cfg.learning_rate = 0.2;
      cfg.batch_size = 8;
      const auto r = train(net, examples, cfg);
      CHECK(r.epoch_loss.back() < r.epoch_loss.front());
    }
    SUBCASE("same seed, same parameters, for either backend") {
      TrainConfig cfg;
      cfg.epochs = 5;
      cfg.dropout = 0.2;
      cfg.seed = 44;
      cfg.batch_size = 7;
      auto a = MatchingNetwork::initialized(small_dims(), 1);
      auto b = MatchingNetwork::initialized(small_dims(), 1);
      b.set_backend(kernels::Backend::Serial);
      const auto ra = train(a, examples, cfg);
      const auto rb = train(b, examples, cfg);
      CHECK(ra.epoch_loss == rb.epoch_loss);
      const auto la = oracle::copy_layers(a), lb = oracle::copy_layers(b);
      for (std::size_t l = 0; l < la.size(); ++l) {
        CHECK(la[l].w == lb[l].w);
        CHECK(la[l].b == lb[l].b);
      }
    }
    SUBCASE("empty set and bad config") {
      auto net = MatchingNetwork::initialized(small_dims(), 1);
      CHECK(error_code_of([&] { train(net, {}, TrainConfig{}); }) == Errc::EmptyTrainingSet);
      TrainConfig bad;
      bad.batch_size = 0;
      CHECK(error_code_of([&] { train(net, examples, bad); }) == Errc::InvalidArgument);
    }
  }

  TEST_CASE("presets") {
    const auto p = TrainConfig::paper();
    CHECK(p.epochs == 2000);
    CHECK(p.learning_rate == 0.5);
    CHECK(p.dropout == 0.5);
    CHECK(p.batch_size == 1024);
    CHECK(TrainConfig::desk().epochs <= 300);
    const NetDims d;
    CHECK(d.video_in == 2480);
    CHECK(d.text_in == 768);
    CHECK(d.projection == 1024);
  }
}
