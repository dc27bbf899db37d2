#include <Eigen/Core>

#include "imucaps/capsule.hpp"
#include "imucaps/layers.hpp"
#include "imucaps/models.hpp"
#include "model_internal.hpp"

namespace imucaps {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Intermediate values of one forward pass, kept for backprop.
struct CapsNetTrace {
  Conv1dCache conv1;
  Tensor conv1_pre;
  Tensor conv1_act;
  Conv1dCache primary;
  Tensor primary_pre;
  Tensor capsules_raw;     // [I x capsule_dim], ReLU applied, before squash
  Tensor capsules;         // squashed
  Tensor predictions;      // u_hat, [I x J x digit_dim]
  RoutingState routing;
  Tensor digit_flat;       // [J * digit_dim]
  Tensor fc_act;           // sigmoid, [fc_units]
  Tensor scores;
};

// Capsule i = p * L2 + t takes channels p*D .. p*D + D-1 at position t.
Tensor gather_capsules(const Tensor& primary_act, const CapsNetConfig& cfg) {
  const std::size_t positions = primary_act.dim(1);
  Tensor caps({cfg.primary_channels * positions, cfg.capsule_dim});
  for (std::size_t p = 0; p < cfg.primary_channels; ++p) {
    for (std::size_t d = 0; d < cfg.capsule_dim; ++d) {
      const double* src = primary_act.data() + (p * cfg.capsule_dim + d) * positions;
      for (std::size_t t = 0; t < positions; ++t) caps[(p * positions + t) * cfg.capsule_dim + d] = src[t];
    }
  }
  return caps;
}

Tensor scatter_capsules(const Tensor& caps_grad, std::size_t positions, const CapsNetConfig& cfg) {
  Tensor grad({cfg.primary_channels * cfg.capsule_dim, positions});
  for (std::size_t p = 0; p < cfg.primary_channels; ++p) {
    for (std::size_t d = 0; d < cfg.capsule_dim; ++d) {
      double* dst = grad.data() + (p * cfg.capsule_dim + d) * positions;
      for (std::size_t t = 0; t < positions; ++t) dst[t] = caps_grad[(p * positions + t) * cfg.capsule_dim + d];
    }
  }
  return grad;
}

// u_hat_ij = W[p(i), j] * u_i with W shared across positions of channel p.
// Per channel this is one product: [L2 x D] * [D x (J*digit)].
Tensor predict_digits(const Tensor& capsules, const Tensor& weights, const CapsNetConfig& cfg) {
  const std::size_t positions = capsules.dim(0) / cfg.primary_channels;
  const std::size_t width = cfg.class_count * cfg.digit_dim_per_class;
  Tensor u_hat({capsules.dim(0), cfg.class_count, cfg.digit_dim_per_class});
  for (std::size_t p = 0; p < cfg.primary_channels; ++p) {
    const ConstMatrixMap u(capsules.data() + p * positions * cfg.capsule_dim, positions, cfg.capsule_dim);
    const ConstMatrixMap w(weights.data() + p * width * cfg.capsule_dim, width, cfg.capsule_dim);
    MatrixMap(u_hat.data() + p * positions * width, positions, width).noalias() = u * w.transpose();
  }
  return u_hat;
}

Tensor forward(const Tensor& window, const ParamSet& params, const CapsNetConfig& cfg, CapsNetTrace& tr) {
  if (window.shape() != Shape{cfg.input_channels, cfg.input_length}) {
    throw ShapeError("CapsNet input " + shape_to_string(window.shape()) + " does not match config " +
                     shape_to_string({cfg.input_channels, cfg.input_length}));
  }
  tr.conv1_pre = conv1d_forward(window, params.get("conv1.weight"), params.get("conv1.bias"), cfg.conv1_stride,
                                tr.conv1);
  tr.conv1_act = relu(tr.conv1_pre);
  tr.primary_pre = conv1d_forward(tr.conv1_act, params.get("primary.weight"), params.get("primary.bias"),
                                  cfg.primary_stride, tr.primary);
  tr.capsules_raw = gather_capsules(relu(tr.primary_pre), cfg);
  tr.capsules = squash_rows(tr.capsules_raw);
  tr.predictions = predict_digits(tr.capsules, params.get("digit.weight"), cfg);
  tr.routing = dynamic_routing(tr.predictions, cfg.routing_iterations);
  tr.digit_flat = tr.routing.outputs.reshaped({cfg.class_count * cfg.digit_dim_per_class});
  tr.fc_act = sigmoid(dense_forward(tr.digit_flat, params.get("fc.weight"), params.get("fc.bias")));
  tr.scores = dense_forward(tr.fc_act, params.get("out.weight"), params.get("out.bias"));
  return tr.scores;
}

void backward(const Tensor& grad_scores, const ParamSet& params, const CapsNetConfig& cfg, const CapsNetTrace& tr,
              ParamSet& grads) {
  DenseGrads out = dense_backward(grad_scores, tr.fc_act, params.get("out.weight"));
  grads.get("out.weight") += out.weights;
  grads.get("out.bias") += out.bias;

  DenseGrads fc = dense_backward(sigmoid_backward(out.input, tr.fc_act), tr.digit_flat, params.get("fc.weight"));
  grads.get("fc.weight") += fc.weights;
  grads.get("fc.bias") += fc.bias;

  const Tensor grad_digits = fc.input.reshaped({cfg.class_count, cfg.digit_dim_per_class});
  const Tensor grad_u_hat = dynamic_routing_backward(grad_digits, tr.predictions, tr.routing);

  const std::size_t lower = tr.capsules.dim(0);
  const std::size_t positions = lower / cfg.primary_channels;
  const std::size_t width = cfg.class_count * cfg.digit_dim_per_class;
  const Tensor& weights = params.get("digit.weight");
  Tensor& grad_weights = grads.get("digit.weight");
  Tensor grad_caps({lower, cfg.capsule_dim});
  for (std::size_t p = 0; p < cfg.primary_channels; ++p) {
    const ConstMatrixMap g(grad_u_hat.data() + p * positions * width, positions, width);
    const ConstMatrixMap u(tr.capsules.data() + p * positions * cfg.capsule_dim, positions, cfg.capsule_dim);
    const ConstMatrixMap w(weights.data() + p * width * cfg.capsule_dim, width, cfg.capsule_dim);
    MatrixMap(grad_weights.data() + p * width * cfg.capsule_dim, width, cfg.capsule_dim).noalias() +=
        g.transpose() * u;
    MatrixMap(grad_caps.data() + p * positions * cfg.capsule_dim, positions, cfg.capsule_dim).noalias() = g * w;
  }

  const Tensor grad_raw = squash_backward(grad_caps, tr.capsules_raw);
  const Tensor grad_primary = relu_backward(scatter_capsules(grad_raw, positions, cfg), tr.primary_pre);
  Conv1dGrads primary = conv1d_backward(grad_primary, tr.primary);
  grads.get("primary.weight") += primary.kernels;
  grads.get("primary.bias") += primary.bias;

  Conv1dGrads conv1 = conv1d_backward(relu_backward(primary.input, tr.conv1_pre), tr.conv1, false);
  grads.get("conv1.weight") += conv1.kernels;
  grads.get("conv1.bias") += conv1.bias;
}

}  // namespace

ParamSet init_capsnet_params(const CapsNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Engine engine(derive_seed(seed, {0x43415053}));
  const std::size_t k = cfg.kernel_length;
  const std::size_t primary_out = cfg.primary_channels * cfg.capsule_dim;
  const std::size_t digit_flat = cfg.class_count * cfg.digit_dim_per_class;

  ParamSet params;
  params.add("conv1.weight", detail::glorot_uniform({cfg.conv1_filters, cfg.input_channels, k},
                                                    cfg.input_channels * k, cfg.conv1_filters * k, engine));
  params.add("conv1.bias", Tensor({cfg.conv1_filters}));
  params.add("primary.weight", detail::glorot_uniform({primary_out, cfg.conv1_filters, k}, cfg.conv1_filters * k,
                                                      primary_out * k, engine));
  params.add("primary.bias", Tensor({primary_out}));
  params.add("digit.weight",
             detail::glorot_uniform({cfg.primary_channels, cfg.class_count, cfg.digit_dim_per_class, cfg.capsule_dim},
                                    cfg.capsule_dim, cfg.digit_dim_per_class, engine));
  params.add("fc.weight", detail::glorot_uniform({cfg.fc_units, digit_flat}, digit_flat, cfg.fc_units, engine));
  params.add("fc.bias", Tensor({cfg.fc_units}));
  params.add("out.weight",
             detail::glorot_uniform({cfg.class_count, cfg.fc_units}, cfg.fc_units, cfg.class_count, engine));
  params.add("out.bias", Tensor({cfg.class_count}));
  return params;
}

Tensor capsnet_scores(const Tensor& window, const ParamSet& params, const CapsNetConfig& config, Tensor* features) {
  CapsNetTrace trace;
  Tensor scores = forward(window, params, config, trace);
  if (features) *features = std::move(trace.fc_act);
  return scores;
}

Tensor capsnet_forward(const Tensor& window, const ParamSet& params, const CapsNetConfig& config) {
  return activate_scores(capsnet_scores(window, params, config), config.output_activation);
}

double capsnet_loss(const Tensor& window, std::size_t label, const ParamSet& params, const CapsNetConfig& config,
                    ParamSet* grads, Tensor* scores_out) {
  CapsNetTrace trace;
  const Tensor scores = forward(window, params, config, trace);
  detail::ScoreLoss result = detail::softmax_cross_entropy(scores, label);
  if (grads) backward(result.grad_scores, params, config, trace, *grads);
  if (scores_out) *scores_out = scores;
  return result.loss;
}

}  // namespace imucaps
