#pragma once

#include <cmath>
#include <cstdint>

#include "imucaps/layers.hpp"
#include "imucaps/rng.hpp"
#include "imucaps/tensor.hpp"

namespace imucaps::detail {

// Glorot/Xavier uniform: U(-sqrt(6 / (fan_in + fan_out)), +sqrt(...)).
inline Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Engine& engine) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values()) v = uniform(engine, -limit, limit);
  return t;
}

struct ScoreLoss {
  double loss;
  Tensor grad_scores;
};

// Cross-entropy of softmax(scores) against `label`, and its gradient w.r.t. the scores.
inline ScoreLoss softmax_cross_entropy(const Tensor& scores, std::size_t label) {
  const Tensor target = one_hot(label, scores.size());
  const Tensor probs = softmax(scores);
  const double loss = categorical_cross_entropy(probs, target);
  return {loss, softmax_backward(categorical_cross_entropy_backward(probs, target), probs)};
}

}  // namespace imucaps::detail
