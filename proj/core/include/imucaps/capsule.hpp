#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "imucaps/tensor.hpp"

namespace imucaps {

/// v = (|s|^2 / (1 + |s|^2)) * s / |s|; the zero vector maps to itself.
Tensor squash(const Tensor& s);

/// Squashes each row of an [N x D] tensor independently.
Tensor squash_rows(const Tensor& s);

/// Gradient of squash_rows (or squash, for rank 1) w.r.t. its input.
Tensor squash_backward(const Tensor& upstream, const Tensor& s);

/// Everything routing-by-agreement produced, kept per iteration so the
/// backward pass can replay it.
struct RoutingState {
  Tensor logits;      // b after the last update, [I x J]
  Tensor couplings;   // c used in the last iteration, [I x J]
  Tensor outputs;     // v from the last iteration, [J x D]

  std::vector<Tensor> coupling_history;  // c^t, t = 1..r
  std::vector<Tensor> total_input_history;  // s^t, [J x D]
  std::vector<Tensor> output_history;       // v^t, [J x D]
};

/// Routing-by-agreement between I lower capsules and J upper capsules.
///
///   b = 0
///   repeat r times:
///     c_i = softmax_j(b_i)
///     s_j = sum_i c_ij * u_hat_ij
///     v_j = squash(s_j)
///     b_ij += u_hat_ij . v_j      (skipped after the final iteration)
///
/// `predictions` is u_hat, [I x J x D]. Throws std::invalid_argument when
/// iterations < 1.
RoutingState dynamic_routing(const Tensor& predictions, std::size_t iterations);

/// d loss / d u_hat given d loss / d v (the final outputs), differentiating
/// through every iteration including the logit updates.
Tensor dynamic_routing_backward(const Tensor& upstream, const Tensor& predictions, const RoutingState& state);

}  // namespace imucaps
