#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "imucaps/models.hpp"
#include "imucaps/optimizer.hpp"
#include "imucaps/window_dataset.hpp"

namespace imucaps {

enum class Phase { train, validation };

std::string to_string(Phase phase);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  Phase phase = Phase::train;
  double loss = 0.0;      // mean categorical cross-entropy
  double accuracy = 0.0;  // correct / samples
  std::size_t false_predictions = 0;
  std::size_t samples = 0;
};

/// Final-layer activations laid out on a near-square grid. Cells past the
/// last activation hold kGridSentinel.
struct ActivationGrid {
  static constexpr double kGridSentinel = -1.0;

  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major, rows * cols
};

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double learning_rate = 1e-3;
  /// Fit per-channel standardization on the training windows before epoch 1.
  bool fit_normalization = true;
  /// Stop after the first epoch whose training accuracy reaches this value.
  std::optional<double> stop_at_train_accuracy;
  /// Epochs (1-based) after which `on_activations` receives a grid.
  std::vector<std::size_t> dump_epochs;
  std::function<void(std::size_t epoch, const ActivationGrid&)> on_activations;
  /// Called after each epoch with the train and validation rows.
  std::function<void(const EpochMetrics& train, const EpochMetrics* validation)> on_epoch;
};

struct TrainResult {
  std::vector<EpochMetrics> history;  // train row then validation row, per epoch
  OptimizerState optimizer;
  std::size_t epochs_run = 0;
};

struct EvalResult {
  std::vector<std::size_t> predictions;
  EpochMetrics metrics;
};

/// Mini-batch training with Adam/AMSGrad. The model must already hold its
/// initial parameters. Shuffling and all arithmetic are deterministic in
/// `options.seed`; throws before the first step on an empty training set or
/// an out-of-range label.
TrainResult train(Classifier& model, const std::vector<const FeatureWindow*>& train_set,
                  const std::vector<const FeatureWindow*>& validation_set, const TrainOptions& options,
                  OptimizerState* resume = nullptr);

/// Predicted class per window (argmax of scores) and aggregate metrics.
EvalResult evaluate(const Classifier& model, const std::vector<const FeatureWindow*>& dataset,
                    Phase phase = Phase::validation, std::size_t epoch = 0);

/// Mean final-layer activations over `batch`, reshaped to a near-square grid:
/// cols = ceil(sqrt(n)), rows = ceil(n / cols).
ActivationGrid dump_activations(const Classifier& model, const std::vector<const FeatureWindow*>& batch);

/// Plain comma-separated matrix, one grid row per line.
void write_activation_grid(const ActivationGrid& grid, const std::filesystem::path& path);

/// `epoch,phase,loss,accuracy,false_predictions` with a header row.
void write_metrics_csv(const std::vector<EpochMetrics>& history, const std::filesystem::path& path);
std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path);

/// Pointers to the windows of `dataset` in `subset`, in file order.
std::vector<const FeatureWindow*> select(const WindowDataset& dataset, Subset subset);
std::vector<const FeatureWindow*> select_all(const WindowDataset& dataset);

}  // namespace imucaps
