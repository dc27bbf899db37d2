#include "imucaps/capsule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>


namespace imucaps {

namespace {

// |v| = n / (1 + n) with n = |s|^2, so v = s * sqrt(n) / (1 + n).
void squash_span(std::span<const double> s, std::span<double> v) {
  double n = 0.0;
  for (double x : s) n += x * x;
  const double scale = std::sqrt(n) / (1.0 + n);
  for (std::size_t d = 0; d < s.size(); ++d) v[d] = s[d] * scale;
}

// dv/ds = f I + 2 f'(n) s s^T with f(n) = sqrt(n)/(1+n),
// f'(n) = (1 - n) / (2 sqrt(n) (1+n)^2).
void squash_backward_span(std::span<const double> g, std::span<const double> s, std::span<double> ds) {
  double n = 0.0;
  double dot = 0.0;
  for (std::size_t d = 0; d < s.size(); ++d) {
    n += s[d] * s[d];
    dot += s[d] * g[d];
  }
  if (n == 0.0) {
    for (auto& x : ds) x = 0.0;
    return;
  }
  const double norm = std::sqrt(n);
  const double f = norm / (1.0 + n);
  const double coef = (1.0 - n) / (norm * (1.0 + n) * (1.0 + n)) * dot;
  for (std::size_t d = 0; d < s.size(); ++d) ds[d] = f * g[d] + coef * s[d];
}

}  // namespace

Tensor squash(const Tensor& s) {
  if (s.rank() != 1) throw ShapeError("squash expects a vector, got " + shape_to_string(s.shape()));
  Tensor v(s.shape());
  squash_span(s.values(), v.values());
  return v;
}

Tensor squash_rows(const Tensor& s) {
  if (s.rank() != 2) throw ShapeError("squash_rows expects [N x D], got " + shape_to_string(s.shape()));
  Tensor v(s.shape());
  for (std::size_t i = 0; i < s.dim(0); ++i) squash_span(s.row(i), v.row(i));
  return v;
}

Tensor squash_backward(const Tensor& upstream, const Tensor& s) {
  require_same_shape(upstream, s, "squash_backward");
  Tensor ds(s.shape());
  if (s.rank() == 1) {
    squash_backward_span(upstream.values(), s.values(), ds.values());
  } else if (s.rank() == 2) {
    for (std::size_t i = 0; i < s.dim(0); ++i) squash_backward_span(upstream.row(i), s.row(i), ds.row(i));
  } else {
    throw ShapeError("squash_backward expects rank 1 or 2");
  }
  return ds;
}

namespace {

// Softmax of one row of logits, in place into `out`.
void softmax_row(const double* logits, double* out, std::size_t width) {
  const double peak = *std::max_element(logits, logits + width);
  double total = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    out[j] = std::exp(logits[j] - peak);
    total += out[j];
  }
  for (std::size_t j = 0; j < width; ++j) out[j] /= total;
}

}  // namespace

// Each pass over the lower capsules finishes the logit update of the previous
// iteration for row i, recomputes its couplings, and accumulates s, so u_hat
// is streamed once per iteration.
RoutingState dynamic_routing(const Tensor& predictions, std::size_t iterations) {
  if (iterations < 1) throw std::invalid_argument("dynamic routing needs at least one iteration");
  if (predictions.rank() != 3) {
    throw ShapeError("routing predictions must be [I x J x D], got " + shape_to_string(predictions.shape()));
  }
  const std::size_t lower = predictions.dim(0);
  const std::size_t upper = predictions.dim(1);
  const std::size_t dim = predictions.dim(2);
  const std::size_t width = upper * dim;
  const double* u_hat = predictions.data();

  RoutingState state;
  state.logits = Tensor({lower, upper});
  std::vector<double> expanded(width);
  std::vector<double> product(width);
  for (std::size_t it = 0; it < iterations; ++it) {
    Tensor couplings({lower, upper});
    Tensor total({upper, dim});
    const double* v_prev = it > 0 ? state.output_history.back().data() : nullptr;
    double* s = total.data();
    for (std::size_t i = 0; i < lower; ++i) {
      const double* u = u_hat + i * width;
      double* b = state.logits.data() + i * upper;
      if (v_prev) {
        // b_ij += u_hat_ij . v_j from the previous iteration
        for (std::size_t k = 0; k < width; ++k) product[k] = u[k] * v_prev[k];
        for (std::size_t j = 0; j < upper; ++j) {
          double agreement = 0.0;
          for (std::size_t d = 0; d < dim; ++d) agreement += product[j * dim + d];
          b[j] += agreement;
        }
      }
      double* c = couplings.data() + i * upper;
      softmax_row(b, c, upper);
      for (std::size_t j = 0; j < upper; ++j) std::fill_n(expanded.data() + j * dim, dim, c[j]);
      for (std::size_t k = 0; k < width; ++k) s[k] += expanded[k] * u[k];
    }
    Tensor outputs = squash_rows(total);

    state.coupling_history.push_back(std::move(couplings));
    state.total_input_history.push_back(std::move(total));
    state.output_history.push_back(std::move(outputs));
  }
  state.couplings = state.coupling_history.back();
  state.outputs = state.output_history.back();
  return state;
}

// Reverse of the forward pass. For iteration t the pass over row i
//   1. backprops s^t = sum_i c^t_i u_hat_i into u_hat_i and c^t_i,
//   2. backprops c^t_i = softmax(b^(t-1)_i), which completes d/db^(t-1)_i
//      (the logit update b^(t) = b^(t-1) + a^(t-1) passes gradients through),
//   3. backprops a^(t-1)_ij = u_hat_ij . v^(t-1)_j into u_hat_i and v^(t-1).
Tensor dynamic_routing_backward(const Tensor& upstream, const Tensor& predictions, const RoutingState& state) {
  const std::size_t iterations = state.output_history.size();
  if (iterations == 0) throw std::logic_error("dynamic_routing_backward called without a forward state");
  if (predictions.rank() != 3 || state.coupling_history.back().dim(0) != predictions.dim(0)) {
    throw ShapeError("dynamic_routing_backward: predictions do not match routing state");
  }
  const std::size_t lower = predictions.dim(0);
  const std::size_t upper = predictions.dim(1);
  const std::size_t dim = predictions.dim(2);
  const std::size_t width = upper * dim;
  require_same_shape(upstream, state.outputs, "dynamic_routing_backward upstream");

  const double* u_hat = predictions.data();
  Tensor grad_u(predictions.shape());
  Tensor grad_logits({lower, upper});
  Tensor grad_v = upstream;
  std::vector<double> expanded(width);
  std::vector<double> product(width);
  std::vector<double> grad_c(upper);

  for (std::size_t step = iterations; step-- > 0;) {
    const Tensor grad_s = squash_backward(grad_v, state.total_input_history[step]);
    const double* gs = grad_s.data();
    const double* c_all = state.coupling_history[step].data();
    const double* v_prev = step > 0 ? state.output_history[step - 1].data() : nullptr;
    Tensor grad_v_prev({upper, dim});
    double* gv = grad_v_prev.data();

    for (std::size_t i = 0; i < lower; ++i) {
      const double* u = u_hat + i * width;
      const double* c = c_all + i * upper;
      double* gu = grad_u.data() + i * width;

      for (std::size_t j = 0; j < upper; ++j) std::fill_n(expanded.data() + j * dim, dim, c[j]);
      for (std::size_t k = 0; k < width; ++k) {
        product[k] = gs[k] * u[k];
        gu[k] += expanded[k] * gs[k];
      }
      if (!v_prev) continue;

      double dot = 0.0;
      for (std::size_t j = 0; j < upper; ++j) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) acc += product[j * dim + d];
        grad_c[j] = acc;
        dot += acc * c[j];
      }
      double* gb = grad_logits.data() + i * upper;
      for (std::size_t j = 0; j < upper; ++j) gb[j] += c[j] * (grad_c[j] - dot);

      for (std::size_t j = 0; j < upper; ++j) std::fill_n(expanded.data() + j * dim, dim, gb[j]);
      for (std::size_t k = 0; k < width; ++k) {
        gu[k] += expanded[k] * v_prev[k];
        gv[k] += expanded[k] * u[k];
      }
    }
    grad_v = std::move(grad_v_prev);
  }
  return grad_u;
}

}  // namespace imucaps
