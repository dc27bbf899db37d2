#include "imucaps/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace imucaps {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_difference_check(const LossFunction& loss, const ParamSet& params, const ParamSet& analytic,
                                        const GradCheckOptions& options) {
  if (analytic.size() != params.size()) throw ShapeError("analytic gradient set does not match parameters");

  GradCheckReport report;
  report.tolerance = options.tolerance;
  ParamSet probe = params;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    auto& [name, value] = probe.entries()[p];
    const Tensor& grad = analytic.get(name);
    require_same_shape(value, grad, "gradcheck " + name);

    ParamCheck check{name};
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + options.eps;
      const double up = loss(probe);
      value[i] = saved - options.eps;
      const double down = loss(probe);
      value[i] = saved;

      const double numeric = (up - down) / (2.0 * options.eps);
      const double err = relative_error(grad[i], numeric, options.floor);
      if (err > check.max_relative_error || i == 0) {
        check.max_relative_error = err;
        check.worst_index = i;
        check.analytic_at_worst = grad[i];
        check.numeric_at_worst = numeric;
      }
    }
    report.max_relative_error = std::max(report.max_relative_error, check.max_relative_error);
    report.params.push_back(std::move(check));
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace imucaps
