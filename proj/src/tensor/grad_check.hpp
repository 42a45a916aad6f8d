#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tensor/param_store.hpp"

namespace inttravel::tensor {

struct GradCheckOptions {
  double h = 1e-5;
  // Coordinates probed per parameter; half are drawn from coordinates with a
  // non-zero analytic gradient when enough exist.
  std::size_t samples_per_param = 8;
  std::uint64_t seed = 0;
};

struct ParamGradError {
  std::string name;
  double worst = 0.0;
  std::size_t probed = 0;
};

struct GradCheckReport {
  std::vector<ParamGradError> per_param;
  double worst = 0.0;
  std::string worst_param;

  bool passed(double tolerance) const { return worst <= tolerance; }
};

// |a − n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Compares reverse-mode gradients of loss_fn against central differences on
// seeded coordinate samples of every parameter. loss_fn must rebuild its graph
// from the store on each call. Throws Error(kNonFinite) naming the parameter
// when a perturbed evaluation is not finite.
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, ParameterStore& store,
                           const GradCheckOptions& options = {});

}  // namespace inttravel::tensor
