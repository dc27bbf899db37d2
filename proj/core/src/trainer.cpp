#include "imucaps/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "imucaps/rng.hpp"
#include "text_io.hpp"

namespace imucaps {

std::string to_string(Phase phase) { return phase == Phase::train ? "train" : "validation"; }

namespace {

void check_labels(const Classifier& model, const std::vector<const FeatureWindow*>& windows, const char* which) {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i]->label >= model.class_count()) {
      throw std::out_of_range(std::string(which) + " window " + std::to_string(i) + " has label " +
                              std::to_string(windows[i]->label) + " but the model has " +
                              std::to_string(model.class_count()) + " classes");
    }
    model.check_window(windows[i]->data);
  }
}

EpochMetrics summarize(std::size_t epoch, Phase phase, double loss_sum, std::size_t correct, std::size_t samples) {
  EpochMetrics m;
  m.epoch = epoch;
  m.phase = phase;
  m.samples = samples;
  m.loss = samples ? loss_sum / static_cast<double>(samples) : 0.0;
  m.accuracy = samples ? static_cast<double>(correct) / static_cast<double>(samples) : 0.0;
  m.false_predictions = samples - correct;
  return m;
}

}  // namespace

TrainResult train(Classifier& model, const std::vector<const FeatureWindow*>& train_set,
                  const std::vector<const FeatureWindow*>& validation_set, const TrainOptions& options,
                  OptimizerState* resume) {
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (options.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  check_labels(model, train_set, "training");
  check_labels(model, validation_set, "validation");

  if (options.fit_normalization) {
    std::vector<const Tensor*> inputs;
    inputs.reserve(train_set.size());
    for (const auto* w : train_set) inputs.push_back(&w->data);
    model.normalization() = InputNormalization::fit(inputs);
  }

  TrainResult result;
  result.optimizer = resume ? *resume : OptimizerState::for_params(model.params(), options.learning_rate);
  ParamSet grads = model.params().zeros_like();

  const auto& dump_source = validation_set.empty() ? train_set : validation_set;
  const std::vector<const FeatureWindow*> dump_batch(
      dump_source.begin(), dump_source.begin() + static_cast<std::ptrdiff_t>(std::min(options.batch_size, dump_source.size())));

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Engine engine(derive_seed(options.seed, {0x45504F4348, epoch}));
    std::shuffle(order.begin(), order.end(), engine);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      grads.set_zero();
      for (std::size_t k = start; k < stop; ++k) {
        const FeatureWindow& sample = *train_set[order[k]];
        const auto step = model.accumulate_gradients(sample.data, sample.label, grads);
        loss_sum += step.loss;
        correct += step.predicted == sample.label ? 1 : 0;
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (auto& entry : grads) entry.second *= inv;
      adam_amsgrad_step(model.params(), grads, result.optimizer);
    }

    const EpochMetrics train_metrics = summarize(epoch, Phase::train, loss_sum, correct, train_set.size());
    result.history.push_back(train_metrics);
    const EpochMetrics* validation_metrics = nullptr;
    if (!validation_set.empty()) {
      result.history.push_back(evaluate(model, validation_set, Phase::validation, epoch).metrics);
      validation_metrics = &result.history.back();
    }
    result.epochs_run = epoch;

    if (options.on_activations &&
        std::find(options.dump_epochs.begin(), options.dump_epochs.end(), epoch) != options.dump_epochs.end()) {
      options.on_activations(epoch, dump_activations(model, dump_batch));
    }
    if (options.on_epoch) options.on_epoch(train_metrics, validation_metrics);
    if (options.stop_at_train_accuracy && train_metrics.accuracy >= *options.stop_at_train_accuracy) break;
  }
  return result;
}

EvalResult evaluate(const Classifier& model, const std::vector<const FeatureWindow*>& dataset, Phase phase,
                    std::size_t epoch) {
  EvalResult result;
  result.predictions.reserve(dataset.size());
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (const auto* window : dataset) {
    const auto sample = model.evaluate_sample(window->data, window->label);
    loss_sum += sample.loss;
    correct += sample.predicted == window->label ? 1 : 0;
    result.predictions.push_back(sample.predicted);
  }
  result.metrics = summarize(epoch, phase, loss_sum, correct, dataset.size());
  return result;
}

ActivationGrid dump_activations(const Classifier& model, const std::vector<const FeatureWindow*>& batch) {
  if (batch.empty()) throw std::invalid_argument("activation dump needs at least one window");
  Tensor mean;
  for (const auto* window : batch) {
    Tensor features;
    model.scores(window->data, &features);
    if (mean.empty()) {
      mean = std::move(features);
    } else {
      mean += features;
    }
  }
  mean *= 1.0 / static_cast<double>(batch.size());

  ActivationGrid grid;
  const std::size_t n = mean.size();
  grid.cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  grid.rows = (n + grid.cols - 1) / grid.cols;
  grid.values.assign(grid.rows * grid.cols, ActivationGrid::kGridSentinel);
  std::copy(mean.values().begin(), mean.values().end(), grid.values.begin());
  return grid;
}

void write_activation_grid(const ActivationGrid& grid, const std::filesystem::path& path) {
  auto out = text::open_for_write(path);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      if (c) out << ',';
      out << text::format_double(grid.values[r * grid.cols + c]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_metrics_csv(const std::vector<EpochMetrics>& history, const std::filesystem::path& path) {
  auto out = text::open_for_write(path);
  out << "epoch,phase,loss,accuracy,false_predictions\n";
  for (const auto& m : history) {
    out << m.epoch << ',' << to_string(m.phase) << ',' << text::format_double(m.loss) << ','
        << text::format_double(m.accuracy) << ',' << m.false_predictions << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path) {
  auto in = text::open_for_read(path);
  std::string line;
  std::vector<EpochMetrics> history;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || text::trim(line).empty()) continue;
    const auto fields = text::split(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 5) throw std::runtime_error(where + ": expected 5 fields");
    EpochMetrics m;
    m.epoch = static_cast<std::size_t>(text::parse_int(fields[0], where));
    const std::string phase = text::trim(fields[1]);
    if (phase != "train" && phase != "validation") throw std::runtime_error(where + ": unknown phase " + phase);
    m.phase = phase == "train" ? Phase::train : Phase::validation;
    m.loss = text::parse_double(fields[2], where);
    m.accuracy = text::parse_double(fields[3], where);
    m.false_predictions = static_cast<std::size_t>(text::parse_int(fields[4], where));
    history.push_back(m);
  }
  return history;
}

std::vector<const FeatureWindow*> select(const WindowDataset& dataset, Subset subset) {
  std::vector<const FeatureWindow*> out;
  for (std::size_t i : dataset.indices(subset)) out.push_back(&dataset.windows[i]);
  return out;
}

std::vector<const FeatureWindow*> select_all(const WindowDataset& dataset) {
  std::vector<const FeatureWindow*> out;
  for (const auto& w : dataset.windows) out.push_back(&w);
  return out;
}

}  // namespace imucaps
