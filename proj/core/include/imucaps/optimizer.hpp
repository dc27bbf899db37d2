#pragma once

#include <cstdint>
#include <stdexcept>

#include "imucaps/tensor.hpp"

namespace imucaps {

/// Adam moments plus the AMSGrad running maximum, one tensor per parameter.
struct OptimizerState {
  ParamSet first_moment;
  ParamSet second_moment;
  ParamSet second_moment_max;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zero moments shaped like `params`.
  static OptimizerState for_params(const ParamSet& params, double learning_rate = 1e-3);

  void validate() const;
};

class NonFiniteGradient : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// One Adam step with the AMSGrad denominator:
///
///   m = b1*m + (1-b1)*g          v = b2*v + (1-b2)*g^2
///   m_hat = m/(1-b1^t)           v_hat = v/(1-b2^t)
///   v_max = max(v_max, v_hat)
///   theta -= lr * m_hat / (sqrt(v_max) + eps)
///
/// Missing moment tensors are created on the first call. A gradient holding
/// NaN/Inf throws NonFiniteGradient and leaves params and state untouched.
void adam_amsgrad_step(ParamSet& params, const ParamSet& grads, OptimizerState& state);

}  // namespace imucaps
