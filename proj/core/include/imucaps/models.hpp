#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "imucaps/tensor.hpp"

namespace imucaps {

/// Activation applied to the class scores when reporting probabilities.
/// Predicted classes are argmax of the scores and do not depend on it.
enum class OutputActivation { sigmoid, softmax };

std::string to_string(OutputActivation activation);
OutputActivation output_activation_from_string(const std::string& name);

/// One-dimensional capsule network:
///   Conv1 (ReLU) -> Primary Caps (conv, ReLU, squash) -> Digit Caps (routing)
///   -> fully connected sigmoid layer -> class scores.
struct CapsNetConfig {
  std::size_t input_channels = 9;
  std::size_t input_length = 2000;
  std::size_t conv1_filters = 256;
  std::size_t kernel_length = 12;
  std::size_t conv1_stride = 1;
  std::size_t primary_channels = 20;
  std::size_t capsule_dim = 5;
  std::size_t primary_stride = 2;
  std::size_t class_count = 20;
  std::size_t digit_dim_per_class = 10;
  std::size_t routing_iterations = 3;
  std::size_t fc_units = 256;
  OutputActivation output_activation = OutputActivation::sigmoid;

  /// Dense layer width of the full-size architecture; the default is a desk-scale reduction.
  static constexpr std::size_t kWideFcUnits = 9324;

  void validate() const;
  std::size_t conv1_length() const;
  std::size_t primary_length() const;
  std::size_t primary_capsules() const { return primary_channels * primary_length(); }
};

/// Baseline CNN: conv(128) -> maxpool -> conv(256) -> maxpool -> flatten
///   -> dense(128, ReLU) -> dense(class_count).
struct CnnConfig {
  std::size_t input_channels = 9;
  std::size_t input_length = 2000;
  std::size_t conv1_filters = 128;
  std::size_t conv2_filters = 256;
  std::size_t kernel_length = 5;
  std::size_t pool_size = 3;
  std::size_t hidden_units = 128;
  std::size_t class_count = 20;
  OutputActivation output_activation = OutputActivation::sigmoid;

  void validate() const;
  std::size_t conv1_length() const;
  std::size_t pool1_length() const;
  std::size_t conv2_length() const;
  std::size_t pool2_length() const;
  std::size_t flat_features() const { return conv2_filters * pool2_length(); }
};

using ModelConfig = std::variant<CapsNetConfig, CnnConfig>;

/// Named architecture presets.
enum class Preset { capsnet3, capsnet5, cnn };

Preset preset_from_string(const std::string& name);
std::string to_string(Preset preset);
ModelConfig preset_config(Preset preset, std::size_t input_length, std::size_t class_count);

// ---------------------------------------------------------------------------
// Functional forms. `window` is the already-normalized [C x L] input.
// ---------------------------------------------------------------------------

ParamSet init_capsnet_params(const CapsNetConfig& config, std::uint64_t seed);
ParamSet init_cnn_params(const CnnConfig& config, std::uint64_t seed);

/// Class scores (pre-activation), [class_count]. `features`, when given,
/// receives the activations of the layer feeding the prediction layer.
Tensor capsnet_scores(const Tensor& window, const ParamSet& params, const CapsNetConfig& config,
                      Tensor* features = nullptr);
Tensor cnn_scores(const Tensor& window, const ParamSet& params, const CnnConfig& config, Tensor* features = nullptr);

/// Output-activated class probabilities, [class_count].
Tensor capsnet_forward(const Tensor& window, const ParamSet& params, const CapsNetConfig& config);
Tensor cnn_forward(const Tensor& window, const ParamSet& params, const CnnConfig& config);

/// Training loss: categorical cross-entropy of softmax(scores) against the
/// label. When `grads` is given the parameter gradients are added into it;
/// `scores` receives the class scores of the same forward pass.
double capsnet_loss(const Tensor& window, std::size_t label, const ParamSet& params, const CapsNetConfig& config,
                    ParamSet* grads = nullptr, Tensor* scores = nullptr);
double cnn_loss(const Tensor& window, std::size_t label, const ParamSet& params, const CnnConfig& config,
                ParamSet* grads = nullptr, Tensor* scores = nullptr);

// ---------------------------------------------------------------------------
// Classifier: a model config, its parameters, and the per-channel input
// standardization fitted on the training split.
// ---------------------------------------------------------------------------

struct InputNormalization {
  std::vector<double> mean;
  std::vector<double> scale;  // multiply after subtracting the mean

  static InputNormalization identity(std::size_t channels);
  /// Per-channel mean and 1/std over all windows; channels with zero spread keep scale 1.
  static InputNormalization fit(const std::vector<const Tensor*>& windows);
  Tensor apply(const Tensor& window) const;
};

class Classifier {
 public:
  Classifier(ModelConfig config, std::uint64_t seed);
  Classifier(ModelConfig config, ParamSet params, InputNormalization normalization);

  const ModelConfig& config() const noexcept { return config_; }
  bool is_capsnet() const noexcept { return std::holds_alternative<CapsNetConfig>(config_); }
  std::string kind() const { return is_capsnet() ? "capsnet" : "cnn"; }

  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }
  InputNormalization& normalization() noexcept { return normalization_; }
  const InputNormalization& normalization() const noexcept { return normalization_; }

  std::size_t class_count() const;
  std::size_t input_channels() const;
  std::size_t input_length() const;
  OutputActivation output_activation() const;

  /// Throws ShapeError when the window does not match the configured input.
  void check_window(const Tensor& window) const;

  Tensor scores(const Tensor& window, Tensor* features = nullptr) const;
  Tensor probabilities(const Tensor& window) const;
  std::size_t predict(const Tensor& window) const;

  struct SampleResult {
    double loss;
    std::size_t predicted;
  };

  /// Adds d loss / d params for one labeled window into `grads`.
  SampleResult accumulate_gradients(const Tensor& window, std::size_t label, ParamSet& grads) const;
  /// Loss and predicted class for one window, without gradients.
  SampleResult evaluate_sample(const Tensor& window, std::size_t label) const;

 private:
  ModelConfig config_;
  ParamSet params_;
  InputNormalization normalization_;
};

/// Applies the configured output activation to raw scores.
Tensor activate_scores(const Tensor& scores, OutputActivation activation);

}  // namespace imucaps
