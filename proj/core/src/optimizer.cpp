#include "imucaps/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace imucaps {

OptimizerState OptimizerState::for_params(const ParamSet& params, double learning_rate) {
  OptimizerState state;
  state.first_moment = params.zeros_like();
  state.second_moment = params.zeros_like();
  state.second_moment_max = params.zeros_like();
  state.learning_rate = learning_rate;
  return state;
}

void OptimizerState::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
}

void adam_amsgrad_step(ParamSet& params, const ParamSet& grads, OptimizerState& state) {
  state.validate();
  if (grads.size() != params.size()) throw ShapeError("gradient set does not match parameter set");
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& [name, value] = params.entries()[p];
    const auto& [grad_name, grad] = grads.entries()[p];
    if (grad_name != name) throw ShapeError("gradient '" + grad_name + "' out of order with parameter '" + name + "'");
    require_same_shape(value, grad, "adam gradient for " + name);
    if (!grad.all_finite()) throw NonFiniteGradient("non-finite gradient for parameter " + name);
  }
  if (state.first_moment.size() == 0) {
    state.first_moment = params.zeros_like();
    state.second_moment = params.zeros_like();
    state.second_moment_max = params.zeros_like();
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& theta = params.entries()[p].second;
    const Tensor& g = grads.entries()[p].second;
    Tensor& m = state.first_moment.entries()[p].second;
    Tensor& v = state.second_moment.entries()[p].second;
    Tensor& v_max = state.second_moment_max.entries()[p].second;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      v_max[i] = std::max(v_max[i], v_hat);
      theta[i] -= state.learning_rate * m_hat / (std::sqrt(v_max[i]) + state.epsilon);
    }
  }
}

}  // namespace imucaps
