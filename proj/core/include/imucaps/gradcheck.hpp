#pragma once

#include <functional>
#include <string>
#include <vector>

#include "imucaps/tensor.hpp"

namespace imucaps {

struct GradCheckOptions {
  double eps = 1e-6;
  double tolerance = 1e-5;
  /// Lower bound on the relative-error denominator.
  double floor = 1e-8;
};

struct ParamCheck {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

using LossFunction = std::function<double(const ParamSet&)>;

/// rel = |analytic - numeric| / max(|analytic|, |numeric|, floor)
double relative_error(double analytic, double numeric, double floor);

/// Compares `analytic` against central differences
/// (f(theta + eps) - f(theta - eps)) / (2 eps), one coordinate at a time.
/// `loss` must be a pure function of the parameters it is given.
GradCheckReport finite_difference_check(const LossFunction& loss, const ParamSet& params, const ParamSet& analytic,
                                        const GradCheckOptions& options = {});

}  // namespace imucaps
