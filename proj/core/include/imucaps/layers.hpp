#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "imucaps/tensor.hpp"

namespace imucaps {

/// Output length of a valid (unpadded) 1D convolution.
/// Throws ShapeError when the kernel is longer than the signal.
std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride);

// ---------------------------------------------------------------------------
// 1D convolution
//
//   out[o][t] = bias[o] + sum_{i,k} in[i][t*stride + k] * kernels[o][i][k]
//
// input [C_in x L], kernels [C_out x C_in x K], bias [C_out] -> [C_out x L_out]
// ---------------------------------------------------------------------------

Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride);

/// What the backward pass needs from the forward pass.
struct Conv1dCache {
  std::optional<Tensor> input;
  std::optional<Tensor> kernels;
  std::size_t stride = 1;

  bool ready() const noexcept { return input.has_value() && kernels.has_value(); }
};

struct Conv1dGrads {
  Tensor input;  // empty when not requested
  Tensor kernels;
  Tensor bias;
};

/// Same as conv1d_forward, but records what conv1d_backward needs.
Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
                      Conv1dCache& cache);

/// Throws std::logic_error when `cache` was never filled by a forward pass.
Conv1dGrads conv1d_backward(const Tensor& upstream, const Conv1dCache& cache, bool want_input_grad = true);

// ---------------------------------------------------------------------------
// Fully connected
// ---------------------------------------------------------------------------

/// input [N], weights [M x N], bias [M] -> weights * input + bias
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

DenseGrads dense_backward(const Tensor& upstream, const Tensor& input, const Tensor& weights);

// ---------------------------------------------------------------------------
// Max pooling over the length axis, window == stride, trailing remainder dropped.
// ---------------------------------------------------------------------------

struct MaxPoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

MaxPoolResult maxpool1d_forward(const Tensor& input, std::size_t pool);
Tensor maxpool1d_backward(const Tensor& upstream, const Shape& input_shape, const std::vector<std::size_t>& argmax);

// ---------------------------------------------------------------------------
// Elementwise activations. Backward passes take whichever of input/output
// makes the derivative cheapest.
// ---------------------------------------------------------------------------

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& upstream, const Tensor& input);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);
Tensor sigmoid_backward(const Tensor& upstream, const Tensor& output);

/// Softmax along the last axis (each row of a rank-2 tensor, or the whole
/// vector for rank 1). Uses max subtraction, so large inputs do not overflow.
Tensor softmax(const Tensor& x);
Tensor softmax_backward(const Tensor& upstream, const Tensor& output);

// ---------------------------------------------------------------------------
// Categorical cross-entropy
// ---------------------------------------------------------------------------

inline constexpr double kProbabilityFloor = 1e-12;

/// -sum_c target_c * ln(clamp(predicted_c, kProbabilityFloor, 1)).
/// Throws std::invalid_argument when target is not one-hot.
double categorical_cross_entropy(const Tensor& predicted, const Tensor& target);

/// d loss / d predicted. Zero where the clamp is active.
Tensor categorical_cross_entropy_backward(const Tensor& predicted, const Tensor& target);

Tensor one_hot(std::size_t label, std::size_t classes);

/// Index of the largest element; first one wins on ties.
std::size_t argmax(std::span<const double> values);

}  // namespace imucaps
