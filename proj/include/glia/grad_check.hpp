#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "glia/tensor.hpp"

namespace glia {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double denom_floor = 1e-6;
  // 0 checks every element; otherwise a seeded sample of this many per input.
  std::size_t max_elements_per_input = 0;
  // Random-direction probes over all inputs at once.
  std::size_t directional_probes = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Compares tape gradients of the scalar `f` against central differences.
// `f` is re-invoked for every perturbation and must read the inputs' current
// values each time. Inputs are restored bit-exactly afterwards.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                           const GradCheckOptions& options = {},
                           std::vector<std::string> names = {});

}  // namespace glia
