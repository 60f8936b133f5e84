#pragma once

#include <functional>
#include <string>

#include "ponder/param_store.hpp"
#include "ponder/tensor.hpp"

namespace ponder {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  int worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares reverse-mode gradients of f against central differences, one
// coordinate at a time. f must be deterministic; it is re-evaluated with
// perturbed parameters under NoGrad. Relative error per coordinate is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const std::function<Tensor(ParamStore&)>& f, ParamStore& params,
                           double h = 1e-5);

}  // namespace ponder
