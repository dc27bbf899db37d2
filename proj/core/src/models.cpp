#include "imucaps/models.hpp"

#include <cmath>
#include <stdexcept>
#include <type_traits>

#include "imucaps/layers.hpp"

namespace imucaps {

std::string to_string(OutputActivation activation) {
  return activation == OutputActivation::sigmoid ? "sigmoid" : "softmax";
}

OutputActivation output_activation_from_string(const std::string& name) {
  if (name == "sigmoid") return OutputActivation::sigmoid;
  if (name == "softmax") return OutputActivation::softmax;
  throw std::invalid_argument("unknown output activation: " + name);
}

namespace {

void require_positive(std::size_t value, const char* field) {
  if (value == 0) throw std::invalid_argument(std::string(field) + " must be positive");
}

}  // namespace

void CapsNetConfig::validate() const {
  require_positive(input_channels, "input_channels");
  require_positive(input_length, "input_length");
  require_positive(conv1_filters, "conv1_filters");
  require_positive(kernel_length, "kernel_length");
  require_positive(conv1_stride, "conv1_stride");
  require_positive(primary_channels, "primary_channels");
  require_positive(capsule_dim, "capsule_dim");
  require_positive(primary_stride, "primary_stride");
  require_positive(class_count, "class_count");
  require_positive(digit_dim_per_class, "digit_dim_per_class");
  require_positive(fc_units, "fc_units");
  if (routing_iterations < 1) throw std::invalid_argument("routing_iterations must be at least 1");
  (void)primary_length();
}

std::size_t CapsNetConfig::conv1_length() const {
  return conv1d_output_length(input_length, kernel_length, conv1_stride);
}

std::size_t CapsNetConfig::primary_length() const {
  return conv1d_output_length(conv1_length(), kernel_length, primary_stride);
}

void CnnConfig::validate() const {
  require_positive(input_channels, "input_channels");
  require_positive(input_length, "input_length");
  require_positive(conv1_filters, "conv1_filters");
  require_positive(conv2_filters, "conv2_filters");
  require_positive(kernel_length, "kernel_length");
  require_positive(pool_size, "pool_size");
  require_positive(hidden_units, "hidden_units");
  require_positive(class_count, "class_count");
  if (pool2_length() == 0) throw ShapeError("CNN input too short for two pooling stages");
}

std::size_t CnnConfig::conv1_length() const { return conv1d_output_length(input_length, kernel_length, 1); }
std::size_t CnnConfig::pool1_length() const {
  if (conv1_length() < pool_size) throw ShapeError("CNN input too short for the first pooling stage");
  return conv1_length() / pool_size;
}
std::size_t CnnConfig::conv2_length() const { return conv1d_output_length(pool1_length(), kernel_length, 1); }
std::size_t CnnConfig::pool2_length() const {
  if (conv2_length() < pool_size) throw ShapeError("CNN input too short for the second pooling stage");
  return conv2_length() / pool_size;
}

Preset preset_from_string(const std::string& name) {
  if (name == "capsnet-3") return Preset::capsnet3;
  if (name == "capsnet-5") return Preset::capsnet5;
  if (name == "cnn") return Preset::cnn;
  throw std::invalid_argument("unknown preset '" + name + "' (expected capsnet-3, capsnet-5 or cnn)");
}

std::string to_string(Preset preset) {
  switch (preset) {
    case Preset::capsnet3: return "capsnet-3";
    case Preset::capsnet5: return "capsnet-5";
    case Preset::cnn: return "cnn";
  }
  return "unknown";
}

ModelConfig preset_config(Preset preset, std::size_t input_length, std::size_t class_count) {
  if (preset == Preset::cnn) {
    CnnConfig cnn;
    cnn.input_length = input_length;
    cnn.class_count = class_count;
    cnn.validate();
    return cnn;
  }
  CapsNetConfig caps;
  caps.input_length = input_length;
  caps.class_count = class_count;
  caps.routing_iterations = preset == Preset::capsnet3 ? 3 : 5;
  caps.validate();
  return caps;
}

InputNormalization InputNormalization::identity(std::size_t channels) {
  return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
}

InputNormalization InputNormalization::fit(const std::vector<const Tensor*>& windows) {
  if (windows.empty()) throw std::invalid_argument("cannot fit normalization on zero windows");
  const std::size_t channels = windows.front()->dim(0);
  InputNormalization norm = identity(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Tensor* w : windows) {
      for (double x : w->row(c)) sum += x;
      count += w->dim(1);
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (const Tensor* w : windows) {
      for (double x : w->row(c)) sq += (x - mean) * (x - mean);
    }
    const double std_dev = std::sqrt(sq / static_cast<double>(count));
    norm.mean[c] = mean;
    norm.scale[c] = std_dev > 0.0 ? 1.0 / std_dev : 1.0;
  }
  return norm;
}

Tensor InputNormalization::apply(const Tensor& window) const {
  if (window.rank() != 2 || window.dim(0) != mean.size()) {
    throw ShapeError("normalization expects " + std::to_string(mean.size()) + " channels, got " +
                     shape_to_string(window.shape()));
  }
  Tensor out = window;
  for (std::size_t c = 0; c < mean.size(); ++c) {
    for (double& x : out.row(c)) x = (x - mean[c]) * scale[c];
  }
  return out;
}

Tensor activate_scores(const Tensor& scores, OutputActivation activation) {
  return activation == OutputActivation::sigmoid ? sigmoid(scores) : softmax(scores);
}

Classifier::Classifier(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  std::visit(
      [&](const auto& cfg) {
        cfg.validate();
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, CapsNetConfig>) {
          params_ = init_capsnet_params(cfg, seed);
        } else {
          params_ = init_cnn_params(cfg, seed);
        }
      },
      config_);
  normalization_ = InputNormalization::identity(input_channels());
}

Classifier::Classifier(ModelConfig config, ParamSet params, InputNormalization normalization)
    : config_(std::move(config)), params_(std::move(params)), normalization_(std::move(normalization)) {
  std::visit([](const auto& cfg) { cfg.validate(); }, config_);
  if (normalization_.mean.size() != input_channels() || normalization_.scale.size() != input_channels()) {
    throw ShapeError("normalization channel count does not match model input");
  }
  // Shape-check the supplied parameters against a fresh initialization.
  const Classifier reference(config_, 0);
  if (reference.params_.size() != params_.size()) throw ShapeError("parameter count does not match architecture");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& [name, value] = params_.entries()[i];
    const auto& [ref_name, ref_value] = reference.params_.entries()[i];
    if (name != ref_name) throw ShapeError("unexpected parameter '" + name + "', expected '" + ref_name + "'");
    require_same_shape(value, ref_value, "parameter " + name);
  }
}

std::size_t Classifier::class_count() const {
  return std::visit([](const auto& cfg) { return cfg.class_count; }, config_);
}
std::size_t Classifier::input_channels() const {
  return std::visit([](const auto& cfg) { return cfg.input_channels; }, config_);
}
std::size_t Classifier::input_length() const {
  return std::visit([](const auto& cfg) { return cfg.input_length; }, config_);
}
OutputActivation Classifier::output_activation() const {
  return std::visit([](const auto& cfg) { return cfg.output_activation; }, config_);
}

void Classifier::check_window(const Tensor& window) const {
  if (window.shape() != Shape{input_channels(), input_length()}) {
    throw ShapeError("window " + shape_to_string(window.shape()) + " does not match model input " +
                     shape_to_string({input_channels(), input_length()}));
  }
}

Tensor Classifier::scores(const Tensor& window, Tensor* features) const {
  check_window(window);
  const Tensor x = normalization_.apply(window);
  if (const auto* caps = std::get_if<CapsNetConfig>(&config_)) return capsnet_scores(x, params_, *caps, features);
  return cnn_scores(x, params_, std::get<CnnConfig>(config_), features);
}

Tensor Classifier::probabilities(const Tensor& window) const {
  return activate_scores(scores(window), output_activation());
}

std::size_t Classifier::predict(const Tensor& window) const { return argmax(scores(window).values()); }

Classifier::SampleResult Classifier::accumulate_gradients(const Tensor& window, std::size_t label,
                                                         ParamSet& grads) const {
  check_window(window);
  const Tensor x = normalization_.apply(window);
  Tensor scores;
  double loss = 0.0;
  if (const auto* caps = std::get_if<CapsNetConfig>(&config_)) {
    loss = capsnet_loss(x, label, params_, *caps, &grads, &scores);
  } else {
    loss = cnn_loss(x, label, params_, std::get<CnnConfig>(config_), &grads, &scores);
  }
  return {loss, argmax(scores.values())};
}

Classifier::SampleResult Classifier::evaluate_sample(const Tensor& window, std::size_t label) const {
  check_window(window);
  const Tensor x = normalization_.apply(window);
  Tensor scores;
  double loss = 0.0;
  if (const auto* caps = std::get_if<CapsNetConfig>(&config_)) {
    loss = capsnet_loss(x, label, params_, *caps, nullptr, &scores);
  } else {
    loss = cnn_loss(x, label, params_, std::get<CnnConfig>(config_), nullptr, &scores);
  }
  return {loss, argmax(scores.values())};
}

}  // namespace imucaps
