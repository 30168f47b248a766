#pragma once

#include <functional>
#include <map>
#include <string>

#include "gtad/autodiff.h"
#include "gtad/params.h"

namespace gtad {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  // Keyed by parameter name; one entry per store tensor.
  std::map<std::string, double> per_parameter_errors;
  std::size_t coordinates_checked = 0;
};

// Builds a scalar objective on a fresh tape. Parameters must enter through
// tape.param(store, id) so their gradients can be collected.
using Objective = std::function<Var(Tape&, const ParameterStore&)>;

// Compares analytic gradients of `objective` against central differences
// (f(p+eps) - f(p-eps)) / 2 eps for every coordinate of every tensor in
// `params`. Per-coordinate error is |a - n| / max(|a|, |n|, 1e-8).
// Throws ValidationError naming the parameter if the objective is not finite.
GradCheckReport finite_diff_gradient_check(const Objective& objective,
                                           ParameterStore& params,
                                           double epsilon = 1e-5);

}  // namespace gtad
