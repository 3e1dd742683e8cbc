#pragma once

#include <cstddef>
#include <cstdint>

namespace vtmm {

struct GradCheckConfig {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double step = 1e-5;
};

struct GradCheckResult {
  std::size_t trials = 0;
  std::size_t parameters_checked = 0;
  double max_relative_error = 0.0;  // |analytic - numeric| / max(1, |numeric|)
};

/// Compares backward() against central differences of the batch loss on
/// randomly shaped small networks (with and without dropout, both projection
/// activations). Inputs that land within 1e-3 of a ReLU kink are redrawn.
GradCheckResult gradient_check(const GradCheckConfig& cfg);

}  // namespace vtmm
