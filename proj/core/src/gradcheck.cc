#include "gtad/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "gtad/error.h"

namespace gtad {

namespace {

double evaluate(const Objective& objective, const ParameterStore& params,
                const std::string& context) {
  Tape tape;
  const double v = tape.value(objective(tape, params))[0];
  if (!std::isfinite(v)) {
    throw ValidationError("gradient check: objective is not finite " + context);
  }
  return v;
}

}  // namespace

GradCheckReport finite_diff_gradient_check(const Objective& objective,
                                           ParameterStore& params,
                                           double epsilon) {
  params.zero_grads();
  {
    Tape tape;
    Var out = objective(tape, params);
    if (!std::isfinite(tape.value(out)[0])) {
      throw ValidationError("gradient check: objective is not finite at the "
                            "unperturbed parameters");
    }
    tape.backward(out);
    tape.accumulate_param_grads(params);
  }

  GradCheckReport report;
  for (auto& entry : params.entries()) {
    double worst = 0.0;
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      const double saved = entry.value[i];
      entry.value[i] = saved + epsilon;
      const double up = evaluate(objective, params, "(perturbing " + entry.name + ")");
      entry.value[i] = saved - epsilon;
      const double down = evaluate(objective, params, "(perturbing " + entry.name + ")");
      entry.value[i] = saved;

      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = entry.grad[i];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
      ++report.coordinates_checked;
    }
    report.per_parameter_errors[entry.name] = worst;
    if (report.worst_parameter.empty() || worst > report.max_relative_error) {
      report.max_relative_error = worst;
      report.worst_parameter = entry.name;
    }
  }
  return report;
}

}  // namespace gtad
