// Serial vs OpenMP kernels at the network's real layer shapes.

#include <benchmark/benchmark.h>

#include "vtmm/kernels.hpp"
#include "vtmm/net.hpp"
#include "vtmm/rng.hpp"

namespace {

using vtmm::Vector;
using vtmm::kernels::LayerShape;

Vector random_vector(std::size_t n, std::uint64_t seed) {
  vtmm::Rng rng(seed);
  Vector v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

struct Fixture {
  LayerShape shape;
  std::size_t batch;
  Vector w, b, x, dy, y, dw, db, dx;

  Fixture(std::size_t in, std::size_t out, std::size_t batch_size)
      : shape{in, out},
        batch(batch_size),
        w(random_vector(in * out, 1)),
        b(random_vector(out, 2)),
        x(random_vector(batch_size * in, 3)),
        dy(random_vector(batch_size * out, 4)),
        y(batch_size * out),
        dw(in * out),
        db(out),
        dx(batch_size * in) {}
};

template <vtmm::kernels::Backend B>
void BM_Forward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 32);
  for (auto _ : state) {
    vtmm::kernels::affine_forward(B, f.w, f.b, f.shape, f.x, f.batch, f.y);
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch));
}

template <vtmm::kernels::Backend B>
void BM_BackwardParams(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 32);
  for (auto _ : state) {
    vtmm::kernels::affine_backward_params(B, f.x, f.dy, f.shape, f.batch, f.dw, f.db);
    benchmark::DoNotOptimize(f.dw.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch));
}

template <vtmm::kernels::Backend B>
void BM_BackwardInput(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 32);
  for (auto _ : state) {
    vtmm::kernels::affine_backward_input(B, f.w, f.dy, f.shape, f.batch, f.dx);
    benchmark::DoNotOptimize(f.dx.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch));
}

template <vtmm::kernels::Backend B>
void BM_TrainStep(benchmark::State& state) {
  auto net = vtmm::MatchingNetwork::initialized(vtmm::NetDims{}, 7);
  net.set_backend(B);
  const std::size_t batch = 16;
  const Vector videos = random_vector(batch * net.dims().video_in, 5);
  const Vector texts = random_vector(batch * net.dims().text_in, 6);
  std::vector<int> labels(batch);
  for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % 2);
  auto grad = net.zero_gradient();
  for (auto _ : state) {
    const auto cache = net.forward_train(videos, texts, batch, nullptr);
    grad.zero();
    net.backward(cache, labels, grad);
    net.sgd_step(grad, 0.0);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}

constexpr auto kSerial = vtmm::kernels::Backend::Serial;
constexpr auto kParallel = vtmm::kernels::Backend::Parallel;

}  // namespace

BENCHMARK(BM_Forward<kSerial>)->Args({2480, 1024})->Args({1024, 512});
BENCHMARK(BM_Forward<kParallel>)->Args({2480, 1024})->Args({1024, 512});
BENCHMARK(BM_BackwardParams<kSerial>)->Args({2480, 1024})->Args({1024, 512});
BENCHMARK(BM_BackwardParams<kParallel>)->Args({2480, 1024})->Args({1024, 512});
BENCHMARK(BM_BackwardInput<kSerial>)->Args({1024, 512});
BENCHMARK(BM_BackwardInput<kParallel>)->Args({1024, 512});
BENCHMARK(BM_TrainStep<kSerial>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainStep<kParallel>)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
