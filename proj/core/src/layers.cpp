#include "imucaps/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace imucaps {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

void check_conv_shapes(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride) {
  if (input.rank() != 2) throw ShapeError("conv1d input must be [C_in x L], got " + shape_to_string(input.shape()));
  if (kernels.rank() != 3) {
    throw ShapeError("conv1d kernels must be [C_out x C_in x K], got " + shape_to_string(kernels.shape()));
  }
  if (kernels.dim(1) != input.dim(0)) {
    throw ShapeError("conv1d channel mismatch: input has " + std::to_string(input.dim(0)) +
                     " channels, kernels expect " + std::to_string(kernels.dim(1)));
  }
  if (bias.rank() != 1 || bias.dim(0) != kernels.dim(0)) {
    throw ShapeError("conv1d bias must be [C_out], got " + shape_to_string(bias.shape()));
  }
  if (stride == 0) throw ShapeError("conv1d stride must be positive");
}

// Unfolds the receptive fields into a [(C_in*K) x L_out] matrix.
RowMatrix im2col(const Tensor& input, std::size_t kernel, std::size_t stride, std::size_t out_len) {
  const std::size_t channels = input.dim(0);
  const std::size_t length = input.dim(1);
  RowMatrix cols(channels * kernel, out_len);
  for (std::size_t i = 0; i < channels; ++i) {
    const double* src = input.data() + i * length;
    for (std::size_t k = 0; k < kernel; ++k) {
      double* dst = cols.data() + (i * kernel + k) * out_len;
      if (stride == 1) {
        std::copy_n(src + k, out_len, dst);
      } else {
        for (std::size_t t = 0; t < out_len; ++t) dst[t] = src[t * stride + k];
      }
    }
  }
  return cols;
}

}  // namespace

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride) {
  if (stride == 0 || kernel == 0) throw ShapeError("conv1d kernel and stride must be positive");
  if (length < kernel) {
    throw ShapeError("conv1d kernel length " + std::to_string(kernel) + " exceeds signal length " +
                     std::to_string(length));
  }
  return (length - kernel) / stride + 1;
}

Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride) {
  check_conv_shapes(input, kernels, bias, stride);
  const std::size_t c_out = kernels.dim(0);
  const std::size_t kernel = kernels.dim(2);
  const std::size_t out_len = conv1d_output_length(input.dim(1), kernel, stride);

  const RowMatrix cols = im2col(input, kernel, stride, out_len);
  Tensor out({c_out, out_len});
  MatrixMap result(out.data(), c_out, out_len);
  const ConstMatrixMap weights(kernels.data(), c_out, input.dim(0) * kernel);
  result.noalias() = weights * cols;
  result.colwise() += ConstVectorMap(bias.data(), c_out);
  return out;
}

Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
                      Conv1dCache& cache) {
  Tensor out = conv1d_forward(input, kernels, bias, stride);
  cache.input = input;
  cache.kernels = kernels;
  cache.stride = stride;
  return out;
}

Conv1dGrads conv1d_backward(const Tensor& upstream, const Conv1dCache& cache, bool want_input_grad) {
  if (!cache.ready()) throw std::logic_error("conv1d_backward called without a forward cache");
  const Tensor& input = *cache.input;
  const Tensor& kernels = *cache.kernels;
  const std::size_t c_in = input.dim(0);
  const std::size_t length = input.dim(1);
  const std::size_t c_out = kernels.dim(0);
  const std::size_t kernel = kernels.dim(2);
  const std::size_t out_len = conv1d_output_length(length, kernel, cache.stride);
  if (upstream.shape() != Shape{c_out, out_len}) {
    throw ShapeError("conv1d_backward upstream " + shape_to_string(upstream.shape()) + " does not match output " +
                     shape_to_string({c_out, out_len}));
  }

  const RowMatrix cols = im2col(input, kernel, cache.stride, out_len);
  const ConstMatrixMap grad(upstream.data(), c_out, out_len);

  Conv1dGrads grads;
  grads.kernels = Tensor(kernels.shape());
  MatrixMap(grads.kernels.data(), c_out, c_in * kernel).noalias() = grad * cols.transpose();
  grads.bias = Tensor({c_out});
  VectorMap(grads.bias.data(), c_out) = grad.rowwise().sum();

  if (want_input_grad) {
    const ConstMatrixMap weights(kernels.data(), c_out, c_in * kernel);
    RowMatrix dcols = weights.transpose() * grad;
    grads.input = Tensor(input.shape());
    for (std::size_t i = 0; i < c_in; ++i) {
      double* dst = grads.input.data() + i * length;
      for (std::size_t k = 0; k < kernel; ++k) {
        const double* src = dcols.data() + (i * kernel + k) * out_len;
        for (std::size_t t = 0; t < out_len; ++t) dst[t * cache.stride + k] += src[t];
      }
    }
  }
  return grads;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 1) throw ShapeError("dense input must be a vector, got " + shape_to_string(input.shape()));
  if (weights.rank() != 2 || weights.dim(1) != input.dim(0)) {
    throw ShapeError("dense weights " + shape_to_string(weights.shape()) + " incompatible with input " +
                     shape_to_string(input.shape()));
  }
  if (bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
    throw ShapeError("dense bias " + shape_to_string(bias.shape()) + " incompatible with weights " +
                     shape_to_string(weights.shape()));
  }
  const std::size_t m = weights.dim(0);
  const std::size_t n = weights.dim(1);
  Tensor out({m});
  VectorMap(out.data(), m).noalias() =
      ConstMatrixMap(weights.data(), m, n) * ConstVectorMap(input.data(), n) + ConstVectorMap(bias.data(), m);
  return out;
}

DenseGrads dense_backward(const Tensor& upstream, const Tensor& input, const Tensor& weights) {
  if (weights.rank() != 2 || input.rank() != 1 || weights.dim(1) != input.dim(0)) {
    throw ShapeError("dense_backward: weights/input shape mismatch");
  }
  const std::size_t m = weights.dim(0);
  const std::size_t n = weights.dim(1);
  if (upstream.shape() != Shape{m}) throw ShapeError("dense_backward: upstream must be [M]");

  const ConstVectorMap g(upstream.data(), m);
  const ConstVectorMap x(input.data(), n);
  DenseGrads grads{Tensor({n}), Tensor(weights.shape()), upstream};
  MatrixMap(grads.weights.data(), m, n).noalias() = g * x.transpose();
  VectorMap(grads.input.data(), n).noalias() = ConstMatrixMap(weights.data(), m, n).transpose() * g;
  return grads;
}

MaxPoolResult maxpool1d_forward(const Tensor& input, std::size_t pool) {
  if (input.rank() != 2) throw ShapeError("maxpool input must be [C x L]");
  if (pool == 0) throw ShapeError("pool size must be positive");
  const std::size_t channels = input.dim(0);
  const std::size_t length = input.dim(1);
  if (length < pool) throw ShapeError("pool size exceeds signal length");
  const std::size_t out_len = length / pool;

  MaxPoolResult result{Tensor({channels, out_len}), std::vector<std::size_t>(channels * out_len)};
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t t = 0; t < out_len; ++t) {
      std::size_t best = c * length + t * pool;
      for (std::size_t k = 1; k < pool; ++k) {
        const std::size_t idx = c * length + t * pool + k;
        if (input[idx] > input[best]) best = idx;
      }
      result.output[c * out_len + t] = input[best];
      result.argmax[c * out_len + t] = best;
    }
  }
  return result;
}

Tensor maxpool1d_backward(const Tensor& upstream, const Shape& input_shape, const std::vector<std::size_t>& argmax) {
  if (upstream.size() != argmax.size()) throw ShapeError("maxpool_backward: upstream/argmax size mismatch");
  Tensor grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += upstream[i];
  return grad;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& upstream, const Tensor& input) {
  require_same_shape(upstream, input, "relu_backward");
  Tensor grad = upstream;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(input[i] > 0.0)) grad[i] = 0.0;
  }
  return grad;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = sigmoid(v);
  return out;
}

Tensor sigmoid_backward(const Tensor& upstream, const Tensor& output) {
  require_same_shape(upstream, output, "sigmoid_backward");
  Tensor grad = upstream;
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= output[i] * (1.0 - output[i]);
  return grad;
}

Tensor softmax(const Tensor& x) {
  Tensor out = x;
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.size() / width;
  for (std::size_t r = 0; r < rows; ++r) {
    double* v = out.data() + r * width;
    const double peak = *std::max_element(v, v + width);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      v[j] = std::exp(v[j] - peak);
      total += v[j];
    }
    for (std::size_t j = 0; j < width; ++j) v[j] /= total;
  }
  return out;
}

Tensor softmax_backward(const Tensor& upstream, const Tensor& output) {
  require_same_shape(upstream, output, "softmax_backward");
  Tensor grad(output.shape());
  const std::size_t width = output.shape().back();
  const std::size_t rows = output.size() / width;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* y = output.data() + r * width;
    const double* g = upstream.data() + r * width;
    double dot = 0.0;
    for (std::size_t j = 0; j < width; ++j) dot += g[j] * y[j];
    double* d = grad.data() + r * width;
    for (std::size_t j = 0; j < width; ++j) d[j] = y[j] * (g[j] - dot);
  }
  return grad;
}

namespace {

void check_one_hot(const Tensor& predicted, const Tensor& target) {
  require_same_shape(predicted, target, "categorical_cross_entropy");
  std::size_t ones = 0;
  for (double t : target.values()) {
    if (t == 1.0) {
      ++ones;
    } else if (t != 0.0) {
      throw std::invalid_argument("cross-entropy target must be one-hot");
    }
  }
  if (ones != 1) throw std::invalid_argument("cross-entropy target must be one-hot");
}

}  // namespace

double categorical_cross_entropy(const Tensor& predicted, const Tensor& target) {
  check_one_hot(predicted, target);
  double loss = 0.0;
  for (std::size_t c = 0; c < target.size(); ++c) {
    if (target[c] == 1.0) loss -= std::log(std::clamp(predicted[c], kProbabilityFloor, 1.0));
  }
  return loss;
}

Tensor categorical_cross_entropy_backward(const Tensor& predicted, const Tensor& target) {
  check_one_hot(predicted, target);
  Tensor grad(predicted.shape());
  for (std::size_t c = 0; c < target.size(); ++c) {
    if (target[c] == 1.0 && predicted[c] > kProbabilityFloor && predicted[c] <= 1.0) grad[c] = -1.0 / predicted[c];
  }
  return grad;
}

Tensor one_hot(std::size_t label, std::size_t classes) {
  if (label >= classes) throw std::out_of_range("label " + std::to_string(label) + " outside class range");
  Tensor t({classes});
  t[label] = 1.0;
  return t;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty sequence");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace imucaps
