#include <gtest/gtest.h>

#include <cmath>

#include "imucaps/trainer.hpp"
#include "support.hpp"

using namespace imucaps;
using imucaps::testing::random_tensor;
using imucaps::testing::TempDir;
using imucaps::testing::tiny_capsnet;
using imucaps::testing::tiny_cnn;

namespace {

// Class k windows are noisy copies of a fixed per-class pattern.
std::vector<FeatureWindow> toy_windows(std::size_t classes, std::size_t per_class, std::uint64_t seed) {
  std::vector<FeatureWindow> out;
  for (std::size_t k = 0; k < classes; ++k) {
    const Tensor pattern = random_tensor({3, 40}, 1000 + k, -2.0, 2.0);
    for (std::size_t n = 0; n < per_class; ++n) {
      Tensor w = random_tensor({3, 40}, seed * 7919 + k * 131 + n, -0.3, 0.3);
      w += pattern;
      out.push_back({std::move(w), k});
    }
  }
  return out;
}

std::vector<const FeatureWindow*> pointers(const std::vector<FeatureWindow>& windows) {
  std::vector<const FeatureWindow*> out;
  for (const auto& w : windows) out.push_back(&w);
  return out;
}

}  // namespace

TEST(Train, MemorizesASingleSample) {
  Classifier model(tiny_capsnet(), 3);
  const std::vector<FeatureWindow> one{{random_tensor({3, 40}, 1), 1}};
  TrainOptions options;
  options.epochs = 60;
  options.learning_rate = 0.01;
  const TrainResult result = train(model, pointers(one), {}, options);
  EXPECT_EQ(result.history.back().accuracy, 1.0);
  EXPECT_EQ(evaluate(model, pointers(one)).metrics.accuracy, 1.0);
}

TEST(Train, LearnsSeparableToyClasses) {
  Classifier model(tiny_cnn(), 4);
  const auto windows = toy_windows(3, 8, 1);
  TrainOptions options;
  options.epochs = 30;
  options.batch_size = 4;
  options.learning_rate = 0.01;
  train(model, pointers(windows), {}, options);
  EXPECT_EQ(evaluate(model, pointers(windows)).metrics.accuracy, 1.0);
}

TEST(Train, IdenticalSeedsGiveIdenticalRuns) {
  const auto windows = toy_windows(2, 5, 2);
  const auto validation = toy_windows(2, 2, 3);
  std::vector<ParamSet> finals;
  std::vector<std::vector<EpochMetrics>> histories;
  for (int run = 0; run < 2; ++run) {
    Classifier model(tiny_capsnet(), 5);
    TrainOptions options;
    options.epochs = 3;
    options.batch_size = 3;
    options.seed = 17;
    const TrainResult r = train(model, pointers(windows), pointers(validation), options);
    finals.push_back(model.params());
    histories.push_back(r.history);
  }
  EXPECT_EQ(finals[0], finals[1]);
  ASSERT_EQ(histories[0].size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(histories[0][i].loss, histories[1][i].loss);
    EXPECT_EQ(histories[0][i].accuracy, histories[1][i].accuracy);
  }
}

TEST(Train, DifferentSeedsShuffleDifferently) {
  const auto windows = toy_windows(2, 6, 4);
  ParamSet finals[2];
  for (int run = 0; run < 2; ++run) {
    Classifier model(tiny_cnn(), 5);
    TrainOptions options;
    options.epochs = 1;
    options.batch_size = 2;
    options.seed = 100 + run;
    train(model, pointers(windows), {}, options);
    finals[run] = model.params();
  }
  EXPECT_FALSE(finals[0] == finals[1]);
}

TEST(Train, HistoryAlternatesTrainAndValidation) {
  Classifier model(tiny_cnn(), 6);
  const auto windows = toy_windows(3, 3, 5);
  TrainOptions options;
  options.epochs = 4;
  std::size_t callbacks = 0;
  options.on_epoch = [&](const EpochMetrics& t, const EpochMetrics* v) {
    ++callbacks;
    ASSERT_NE(v, nullptr);
    EXPECT_EQ(t.epoch, v->epoch);
  };
  const TrainResult r = train(model, pointers(windows), pointers(windows), options);
  ASSERT_EQ(r.history.size(), 8u);
  EXPECT_EQ(callbacks, 4u);
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    const EpochMetrics& m = r.history[i];
    EXPECT_EQ(m.phase, i % 2 ? Phase::validation : Phase::train);
    EXPECT_EQ(m.epoch, i / 2 + 1);
    EXPECT_EQ(static_cast<double>(m.false_predictions),
              std::round(static_cast<double>(m.samples) * (1.0 - m.accuracy)));
  }
}

TEST(Train, StopsEarlyAtTargetAccuracy) {
  Classifier model(tiny_cnn(), 4);
  const auto windows = toy_windows(3, 8, 1);
  TrainOptions options;
  options.epochs = 100;
  options.batch_size = 4;
  options.learning_rate = 0.01;
  options.stop_at_train_accuracy = 0.9;
  const TrainResult r = train(model, pointers(windows), {}, options);
  EXPECT_LT(r.epochs_run, 100u);
  EXPECT_GE(r.history.back().accuracy, 0.9);
}

TEST(Train, RejectsBadInputsBeforeTraining) {
  Classifier model(tiny_cnn(), 1);
  const ParamSet before = model.params();
  EXPECT_THROW(train(model, {}, {}, {}), std::invalid_argument);
  const std::vector<FeatureWindow> bad{{random_tensor({3, 40}, 1), 0}, {random_tensor({3, 40}, 2), 3}};
  EXPECT_THROW(train(model, pointers(bad), {}, {}), std::out_of_range);
  const std::vector<FeatureWindow> wrong_shape{{random_tensor({3, 39}, 1), 0}};
  EXPECT_THROW(train(model, pointers(wrong_shape), {}, {}), ShapeError);
  EXPECT_EQ(model.params(), before);
}

TEST(Evaluate, AccuracyMatchesFalsePredictions) {
  const Classifier model(tiny_capsnet(), 8);
  const auto windows = toy_windows(2, 7, 9);
  const EvalResult r = evaluate(model, pointers(windows));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) correct += r.predictions[i] == windows[i].label ? 1 : 0;
  EXPECT_EQ(r.metrics.accuracy, static_cast<double>(correct) / windows.size());
  EXPECT_EQ(r.metrics.accuracy, 1.0 - static_cast<double>(r.metrics.false_predictions) / windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) EXPECT_EQ(r.predictions[i], model.predict(windows[i].data));
}

TEST(Evaluate, UntrainedModelsSitNearChance) {
  CnnConfig cfg = tiny_cnn();
  cfg.class_count = 20;
  std::vector<FeatureWindow> windows;
  for (std::size_t i = 0; i < 200; ++i) windows.push_back({random_tensor({3, 40}, 500 + i), i % 20});
  double total = 0.0;
  const int seeds = 30;
  for (int seed = 0; seed < seeds; ++seed) {
    total += evaluate(Classifier(cfg, seed), pointers(windows)).metrics.accuracy;
  }
  // 6000 Bernoulli(0.05) draws: std of the mean is about 0.003.
  EXPECT_NEAR(total / seeds, 0.05, 0.02);
}

TEST(Activations, GridShapeAndSentinel) {
  CapsNetConfig cfg = tiny_capsnet();
  cfg.fc_units = 10;
  const Classifier model(cfg, 1);
  const auto windows = toy_windows(2, 2, 1);
  const ActivationGrid grid = dump_activations(model, pointers(windows));
  EXPECT_EQ(grid.cols, 4u);
  EXPECT_EQ(grid.rows, 3u);
  ASSERT_EQ(grid.values.size(), 12u);
  for (std::size_t i = 10; i < 12; ++i) EXPECT_EQ(grid.values[i], ActivationGrid::kGridSentinel);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_GT(grid.values[i], 0.0);
    EXPECT_LT(grid.values[i], 1.0);
  }
}

TEST(Activations, ZeroWeightModelGivesConstantGrid) {
  CapsNetConfig cfg = tiny_capsnet();
  cfg.fc_units = 16;
  Classifier model(cfg, 1);
  for (auto& [name, t] : model.params()) t.fill(0.0);
  const auto windows = toy_windows(2, 3, 2);
  const ActivationGrid grid = dump_activations(model, pointers(windows));
  EXPECT_EQ(grid.rows * grid.cols, 16u);
  for (double v : grid.values) EXPECT_EQ(v, 0.5);
}

TEST(Activations, OneDumpPerRequestedEpoch) {
  Classifier model(tiny_cnn(), 2);
  const auto windows = toy_windows(3, 2, 3);
  TempDir dir("dumps");
  TrainOptions options;
  options.epochs = 40;
  options.dump_epochs = {1, 10, 20, 30, 40};
  options.on_activations = [&](std::size_t epoch, const ActivationGrid& grid) {
    write_activation_grid(grid, dir / ("epoch_" + std::to_string(epoch) + ".csv"));
  };
  train(model, pointers(windows), {}, options);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& entry : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 5u);
}

TEST(MetricsCsv, RoundTrips) {
  TempDir dir("metrics");
  const std::vector<EpochMetrics> history{{1, Phase::train, 2.5, 0.25, 3, 4}, {1, Phase::validation, 0.1, 1.0, 0, 2}};
  write_metrics_csv(history, dir / "m.csv");
  const auto back = read_metrics_csv(dir / "m.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].loss, 2.5);
  EXPECT_EQ(back[1].phase, Phase::validation);
  EXPECT_EQ(back[0].false_predictions, 3u);
}
