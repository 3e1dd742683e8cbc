#include "vtmm/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cstdint>

namespace vtmm::kernels {

namespace {

// Row-level building blocks shared by both backends.

// Eight interleaved partial sums combined in a fixed tree; the order is part
// of the numeric contract, both backends go through here.
inline double forward_element(const double* w_row, double bias, const double* x_row, std::size_t n) {
  constexpr std::size_t kLanes = 8;
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += w_row[i + l] * x_row[i + l];
  }
  for (std::size_t l = 0; i < n; ++i, ++l) acc[l] += w_row[i] * x_row[i];
  const double sum = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  return bias + sum;
}

inline void forward_row(std::span<const double> w, std::span<const double> b, LayerShape shape,
                        std::span<const double> x, std::size_t batch, std::span<double> y, std::size_t o) {
  const double* w_row = w.data() + o * shape.in;
  for (std::size_t s = 0; s < batch; ++s) {
    y[s * shape.out + o] = forward_element(w_row, b[o], x.data() + s * shape.in, shape.in);
  }
}

inline void params_row(std::span<const double> x, std::span<const double> dy, LayerShape shape,
                       std::size_t batch, std::span<double> dw, std::span<double> db, std::size_t o) {
  double* dw_row = dw.data() + o * shape.in;
  double bias_acc = db[o];
  for (std::size_t s = 0; s < batch; ++s) {
    const double g = dy[s * shape.out + o];
    bias_acc += g;
    if (g == 0.0) continue;
    const double* x_row = x.data() + s * shape.in;
    for (std::size_t i = 0; i < shape.in; ++i) dw_row[i] += g * x_row[i];
  }
  db[o] = bias_acc;
}

inline void input_row(std::span<const double> w, std::span<const double> dy, LayerShape shape,
                      std::span<double> dx, std::size_t s) {
  double* dx_row = dx.data() + s * shape.in;
  std::fill(dx_row, dx_row + shape.in, 0.0);
  for (std::size_t o = 0; o < shape.out; ++o) {
    const double g = dy[s * shape.out + o];
    if (g == 0.0) continue;
    const double* w_row = w.data() + o * shape.in;
    for (std::size_t i = 0; i < shape.in; ++i) dx_row[i] += g * w_row[i];
  }
}

void check_shapes(std::span<const double> w, LayerShape shape) {
  assert(w.size() == shape.in * shape.out);
  (void)w;
  (void)shape;
}

}  // namespace

namespace serial {

void affine_forward(std::span<const double> w, std::span<const double> b, LayerShape shape,
                    std::span<const double> x, std::size_t batch, std::span<double> y) {
  check_shapes(w, shape);
  for (std::size_t o = 0; o < shape.out; ++o) forward_row(w, b, shape, x, batch, y, o);
}

void affine_backward_params(std::span<const double> x, std::span<const double> dy, LayerShape shape,
                            std::size_t batch, std::span<double> dw, std::span<double> db) {
  check_shapes(dw, shape);
  for (std::size_t o = 0; o < shape.out; ++o) params_row(x, dy, shape, batch, dw, db, o);
}

void affine_backward_input(std::span<const double> w, std::span<const double> dy, LayerShape shape,
                           std::size_t batch, std::span<double> dx) {
  check_shapes(w, shape);
  for (std::size_t s = 0; s < batch; ++s) input_row(w, dy, shape, dx, s);
}

}  // namespace serial

namespace parallel {

void affine_forward(std::span<const double> w, std::span<const double> b, LayerShape shape,
                    std::span<const double> x, std::size_t batch, std::span<double> y) {
  check_shapes(w, shape);
  const auto rows = static_cast<std::int64_t>(shape.out);
#pragma omp parallel for schedule(static)
  for (std::int64_t o = 0; o < rows; ++o) forward_row(w, b, shape, x, batch, y, static_cast<std::size_t>(o));
}

void affine_backward_params(std::span<const double> x, std::span<const double> dy, LayerShape shape,
                            std::size_t batch, std::span<double> dw, std::span<double> db) {
  check_shapes(dw, shape);
  const auto rows = static_cast<std::int64_t>(shape.out);
#pragma omp parallel for schedule(static)
  for (std::int64_t o = 0; o < rows; ++o) params_row(x, dy, shape, batch, dw, db, static_cast<std::size_t>(o));
}

void affine_backward_input(std::span<const double> w, std::span<const double> dy, LayerShape shape,
                           std::size_t batch, std::span<double> dx) {
  check_shapes(w, shape);
  const auto rows = static_cast<std::int64_t>(batch);
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < rows; ++s) input_row(w, dy, shape, dx, static_cast<std::size_t>(s));
}

}  // namespace parallel

void affine_forward(Backend backend, std::span<const double> w, std::span<const double> b, LayerShape shape,
                    std::span<const double> x, std::size_t batch, std::span<double> y) {
  if (backend == Backend::Parallel) {
    parallel::affine_forward(w, b, shape, x, batch, y);
  } else {
    serial::affine_forward(w, b, shape, x, batch, y);
  }
}

void affine_backward_params(Backend backend, std::span<const double> x, std::span<const double> dy,
                            LayerShape shape, std::size_t batch, std::span<double> dw, std::span<double> db) {
  if (backend == Backend::Parallel) {
    parallel::affine_backward_params(x, dy, shape, batch, dw, db);
  } else {
    serial::affine_backward_params(x, dy, shape, batch, dw, db);
  }
}

void affine_backward_input(Backend backend, std::span<const double> w, std::span<const double> dy,
                           LayerShape shape, std::size_t batch, std::span<double> dx) {
  if (backend == Backend::Parallel) {
    parallel::affine_backward_input(w, dy, shape, batch, dx);
  } else {
    serial::affine_backward_input(w, dy, shape, batch, dx);
  }
}

}  // namespace vtmm::kernels
