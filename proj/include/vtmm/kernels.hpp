#pragma once

#include <cstddef>
#include <span>

// Batched dense-layer kernels. All matrices are row-major. A layer has
// weights [out x in] and bias [out]; a batch of activations is [batch x in].
//
// The parallel variants split work so that every output element is produced
// by exactly one thread using the same summation order as the serial code,
// so serial and parallel results are bit-identical for any thread count.
namespace vtmm::kernels {

enum class Backend { Serial, Parallel };

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
};

namespace serial {

// y[s][o] = b[o] + sum_i w[o][i] * x[s][i]
void affine_forward(std::span<const double> w, std::span<const double> b, LayerShape shape,
                    std::span<const double> x, std::size_t batch, std::span<double> y);

// dw[o][i] += sum_s dy[s][o] * x[s][i];  db[o] += sum_s dy[s][o]
void affine_backward_params(std::span<const double> x, std::span<const double> dy, LayerShape shape,
                            std::size_t batch, std::span<double> dw, std::span<double> db);

// dx[s][i] = sum_o w[o][i] * dy[s][o]
void affine_backward_input(std::span<const double> w, std::span<const double> dy, LayerShape shape,
                           std::size_t batch, std::span<double> dx);

}  // namespace serial

namespace parallel {

void affine_forward(std::span<const double> w, std::span<const double> b, LayerShape shape,
                    std::span<const double> x, std::size_t batch, std::span<double> y);
void affine_backward_params(std::span<const double> x, std::span<const double> dy, LayerShape shape,
                            std::size_t batch, std::span<double> dw, std::span<double> db);
void affine_backward_input(std::span<const double> w, std::span<const double> dy, LayerShape shape,
                           std::size_t batch, std::span<double> dx);

}  // namespace parallel

void affine_forward(Backend backend, std::span<const double> w, std::span<const double> b, LayerShape shape,
                    std::span<const double> x, std::size_t batch, std::span<double> y);
void affine_backward_params(Backend backend, std::span<const double> x, std::span<const double> dy,
                            LayerShape shape, std::size_t batch, std::span<double> dw, std::span<double> db);
void affine_backward_input(Backend backend, std::span<const double> w, std::span<const double> dy,
                           LayerShape shape, std::size_t batch, std::span<double> dx);

}  // namespace vtmm::kernels
