#include "imucaps/layers.hpp"
#include "imucaps/models.hpp"
#include "model_internal.hpp"

namespace imucaps {

namespace {

struct CnnTrace {
  Conv1dCache conv1;
  Tensor conv1_pre;
  MaxPoolResult pool1;
  Shape pool1_in_shape;
  Conv1dCache conv2;
  Tensor conv2_pre;
  MaxPoolResult pool2;
  Shape pool2_in_shape;
  Tensor flat;
  Tensor hidden_pre;
  Tensor hidden;
};

Tensor forward(const Tensor& window, const ParamSet& params, const CnnConfig& cfg, CnnTrace& tr) {
  if (window.shape() != Shape{cfg.input_channels, cfg.input_length}) {
    throw ShapeError("CNN input " + shape_to_string(window.shape()) + " does not match config " +
                     shape_to_string({cfg.input_channels, cfg.input_length}));
  }
  tr.conv1_pre = conv1d_forward(window, params.get("conv1.weight"), params.get("conv1.bias"), 1, tr.conv1);
  const Tensor act1 = relu(tr.conv1_pre);
  tr.pool1_in_shape = act1.shape();
  tr.pool1 = maxpool1d_forward(act1, cfg.pool_size);

  tr.conv2_pre = conv1d_forward(tr.pool1.output, params.get("conv2.weight"), params.get("conv2.bias"), 1, tr.conv2);
  const Tensor act2 = relu(tr.conv2_pre);
  tr.pool2_in_shape = act2.shape();
  tr.pool2 = maxpool1d_forward(act2, cfg.pool_size);

  tr.flat = tr.pool2.output.reshaped({cfg.flat_features()});
  tr.hidden_pre = dense_forward(tr.flat, params.get("dense1.weight"), params.get("dense1.bias"));
  tr.hidden = relu(tr.hidden_pre);
  return dense_forward(tr.hidden, params.get("out.weight"), params.get("out.bias"));
}

void backward(const Tensor& grad_scores, const ParamSet& params, const CnnConfig& cfg, const CnnTrace& tr,
              ParamSet& grads) {
  DenseGrads out = dense_backward(grad_scores, tr.hidden, params.get("out.weight"));
  grads.get("out.weight") += out.weights;
  grads.get("out.bias") += out.bias;

  DenseGrads dense1 = dense_backward(relu_backward(out.input, tr.hidden_pre), tr.flat, params.get("dense1.weight"));
  grads.get("dense1.weight") += dense1.weights;
  grads.get("dense1.bias") += dense1.bias;

  const Tensor grad_pool2 = dense1.input.reshaped({cfg.conv2_filters, cfg.pool2_length()});
  const Tensor grad_act2 = maxpool1d_backward(grad_pool2, tr.pool2_in_shape, tr.pool2.argmax);
  Conv1dGrads conv2 = conv1d_backward(relu_backward(grad_act2, tr.conv2_pre), tr.conv2);
  grads.get("conv2.weight") += conv2.kernels;
  grads.get("conv2.bias") += conv2.bias;

  const Tensor grad_act1 = maxpool1d_backward(conv2.input, tr.pool1_in_shape, tr.pool1.argmax);
  Conv1dGrads conv1 = conv1d_backward(relu_backward(grad_act1, tr.conv1_pre), tr.conv1, false);
  grads.get("conv1.weight") += conv1.kernels;
  grads.get("conv1.bias") += conv1.bias;
}

}  // namespace

ParamSet init_cnn_params(const CnnConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Engine engine(derive_seed(seed, {0x434E4E}));
  const std::size_t k = cfg.kernel_length;
  ParamSet params;
  params.add("conv1.weight", detail::glorot_uniform({cfg.conv1_filters, cfg.input_channels, k},
                                                    cfg.input_channels * k, cfg.conv1_filters * k, engine));
  params.add("conv1.bias", Tensor({cfg.conv1_filters}));
  params.add("conv2.weight", detail::glorot_uniform({cfg.conv2_filters, cfg.conv1_filters, k}, cfg.conv1_filters * k,
                                                    cfg.conv2_filters * k, engine));
  params.add("conv2.bias", Tensor({cfg.conv2_filters}));
  params.add("dense1.weight", detail::glorot_uniform({cfg.hidden_units, cfg.flat_features()}, cfg.flat_features(),
                                                     cfg.hidden_units, engine));
  params.add("dense1.bias", Tensor({cfg.hidden_units}));
  params.add("out.weight",
             detail::glorot_uniform({cfg.class_count, cfg.hidden_units}, cfg.hidden_units, cfg.class_count, engine));
  params.add("out.bias", Tensor({cfg.class_count}));
  return params;
}

Tensor cnn_scores(const Tensor& window, const ParamSet& params, const CnnConfig& config, Tensor* features) {
  CnnTrace trace;
  Tensor scores = forward(window, params, config, trace);
  if (features) *features = std::move(trace.hidden);
  return scores;
}

Tensor cnn_forward(const Tensor& window, const ParamSet& params, const CnnConfig& config) {
  return activate_scores(cnn_scores(window, params, config), config.output_activation);
}

double cnn_loss(const Tensor& window, std::size_t label, const ParamSet& params, const CnnConfig& config,
                ParamSet* grads, Tensor* scores_out) {
  CnnTrace trace;
  const Tensor scores = forward(window, params, config, trace);
  detail::ScoreLoss result = detail::softmax_cross_entropy(scores, label);
  if (grads) backward(result.grad_scores, params, config, trace, *grads);
  if (scores_out) *scores_out = scores;
  return result.loss;
}

}  // namespace imucaps
