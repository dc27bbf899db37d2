#include "commands.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "imucaps/checkpoint.hpp"
#include "imucaps/game.hpp"
#include "imucaps/imu_io.hpp"
#include "imucaps/synth.hpp"
#include "imucaps/trainer.hpp"

namespace imucaps::cli {

namespace {

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) throw std::runtime_error(std::string(what) + " not found: " + path.string());
}

fs::path staging_name(const fs::path& destination) {
  const fs::path absolute = fs::absolute(destination).lexically_normal();
  fs::path name = absolute.filename();
  if (name.empty()) name = absolute.parent_path().filename();
  const fs::path parent = absolute.filename().empty() ? absolute.parent_path().parent_path() : absolute.parent_path();
  return parent / ("." + name.string() + ".staging-" + std::to_string(::getpid()));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string epoch_file(std::size_t epoch) {
  char name[48];
  std::snprintf(name, sizeof name, "activations_epoch_%03zu.csv", epoch);
  return name;
}

std::string format_metrics(const EpochMetrics& m) {
  char line[128];
  std::snprintf(line, sizeof line, "loss=%.4f acc=%.4f false=%zu", m.loss, m.accuracy, m.false_predictions);
  return line;
}

void print_epoch(std::size_t total, const EpochMetrics& train, const EpochMetrics* validation) {
  std::cout << "epoch " << train.epoch << '/' << total << "  train " << format_metrics(train);
  if (validation) std::cout << "  validation " << format_metrics(*validation);
  std::cout << std::endl;
}

ModelConfig build_model_config(const TrainArgs& args, const WindowDataset& data) {
  ModelConfig config = args.model_config ? model_config_from_json(read_text(*args.model_config))
                                         : preset_config(preset_from_string(args.preset), data.length, args.classes);
  const OutputActivation activation = output_activation_from_string(args.output_activation);
  if (auto* caps = std::get_if<CapsNetConfig>(&config)) {
    if (args.routing_iterations) caps->routing_iterations = *args.routing_iterations;
    if (args.fc_units) caps->fc_units = *args.fc_units;
    if (!args.model_config) caps->output_activation = activation;
    caps->validate();
  } else {
    auto& cnn = std::get<CnnConfig>(config);
    if (args.routing_iterations) throw std::invalid_argument("--routing-iterations does not apply to the cnn preset");
    if (args.fc_units) throw std::invalid_argument("--fc-units does not apply to the cnn preset");
    if (!args.model_config) cnn.output_activation = activation;
    cnn.validate();
  }
  return config;
}

std::vector<const FeatureWindow*> pick_subset(const WindowDataset& data, const std::string& subset) {
  if (subset == "all") return select_all(data);
  if (subset == "train") return select(data, Subset::train);
  if (subset == "validation") return select(data, Subset::validation);
  throw std::invalid_argument("subset must be train, validation, or all; got '" + subset + "'");
}

void check_dataset_matches(const Classifier& model, const WindowDataset& data) {
  if (data.channels != model.input_channels() || data.length != model.input_length()) {
    throw ShapeError("dataset windows are " + std::to_string(data.channels) + " x " + std::to_string(data.length) +
                     " but the model expects " + std::to_string(model.input_channels()) + " x " +
                     std::to_string(model.input_length()));
  }
  data.validate(model.class_count());
}

}  // namespace

StagedOutput::StagedOutput(fs::path destination)
    : destination_(std::move(destination)), staging_(staging_name(destination_)) {
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

StagedOutput::~StagedOutput() {
  std::error_code ignored;
  if (!committed_) fs::remove_all(staging_, ignored);
}

fs::path StagedOutput::path(const std::string& name) const { return staging_ / name; }

void StagedOutput::commit() {
  fs::create_directories(destination_);
  std::vector<fs::path> entries;
  for (const auto& entry : fs::directory_iterator(staging_)) entries.push_back(entry.path());
  std::sort(entries.begin(), entries.end());
  for (const auto& entry : entries) fs::rename(entry, destination_ / entry.filename());
  fs::remove_all(staging_);
  committed_ = true;
}

StagedFile::StagedFile(fs::path destination)
    : destination_(std::move(destination)), staging_(staging_name(destination_)) {
  if (destination_.has_parent_path()) fs::create_directories(destination_.parent_path());
}

StagedFile::~StagedFile() {
  std::error_code ignored;
  if (!committed_) fs::remove(staging_, ignored);
}

void StagedFile::commit() {
  fs::rename(staging_, destination_);
  committed_ = true;
}

void gen_data(const GenDataArgs& args) {
  GeneratorConfig config;
  if (args.scale == "desk") {
    config = GeneratorConfig::desk();
  } else if (args.scale == "full") {
    config = GeneratorConfig::full();
  } else {
    throw std::invalid_argument("scale must be desk or full; got '" + args.scale + "'");
  }
  config.seed = args.seed;
  config.class_count = args.classes;
  if (args.subjects) config.subjects = *args.subjects;
  if (args.repetitions) config.repetitions = *args.repetitions;
  if (args.accel_noise) config.accel_noise = *args.accel_noise;
  if (args.gyro_noise) config.gyro_noise = *args.gyro_noise;
  config.validate();

  StagedOutput stage(args.out);
  const GeneratedDataset data = generate_dataset(config);
  write_generated_dataset(data, stage.path(""));
  stage.commit();
  std::cout << "wrote " << data.recordings.size() << " recordings and manifest.json to " << args.out.string()
            << std::endl;
}

void preprocess(const PreprocessArgs& args) {
  const fs::path manifest_path = args.raw / "manifest.json";
  require_file(manifest_path, "manifest");
  if (args.calibration) require_file(*args.calibration, "calibration file");
  const Manifest manifest = read_manifest(manifest_path);
  for (const auto& entry : manifest.recordings) require_file(args.raw / entry.file, "recording");

  PreprocessOptions options;
  options.median_window = args.median_window;
  options.beta = args.beta;
  options.window_length = args.window_length;
  options.stride = args.stride;
  options.pad_short = args.pad_short;
  if (args.calibration) options.calibration = read_calibration(*args.calibration);

  WindowDataset data;
  data.length = args.window_length;
  for (const auto& entry : manifest.recordings) {
    ImuRecording rec = read_recording_csv(args.raw / entry.file, manifest.sample_rate);
    rec.label = entry.label;
    rec.subject = entry.subject;
    rec.repetition = entry.repetition;
    try {
      for (auto& window : preprocess_recording(rec, options)) data.add(std::move(window), entry.subset);
    } catch (const std::exception& e) {
      throw std::runtime_error(entry.file + ": " + e.what());
    }
  }
  if (!data.has_assignment()) {
    std::vector<std::size_t> labels;
    for (const auto& w : data.windows) labels.push_back(w.label);
    data.subsets = stratified_split(labels, 0.8, args.seed);
  }

  StagedFile staged(args.out);
  save_window_dataset(data, staged.path());
  staged.commit();
  std::cout << "wrote " << data.size() << " windows (" << data.indices(Subset::train).size() << " train, "
            << data.indices(Subset::validation).size() << " validation) to " << args.out.string() << std::endl;
}

void train(const TrainArgs& args) {
  require_file(args.dataset, "dataset");
  if (args.model_config) require_file(*args.model_config, "model config");
  const WindowDataset data = load_window_dataset(args.dataset);
  const ModelConfig config = build_model_config(args, data);
  Classifier model(config, args.seed);
  check_dataset_matches(model, data);

  const auto train_set = select(data, Subset::train);
  const auto validation_set = select(data, Subset::validation);
  if (train_set.empty()) throw std::runtime_error("dataset has no training windows");

  StagedOutput stage(args.out);
  TrainOptions options;
  options.epochs = args.epochs;
  options.batch_size = args.batch_size;
  options.seed = args.seed;
  options.learning_rate = args.learning_rate;
  options.stop_at_train_accuracy = args.stop_at_train_accuracy;
  options.dump_epochs = args.dump_epochs;
  options.on_activations = [&](std::size_t epoch, const ActivationGrid& grid) {
    write_activation_grid(grid, stage.path(epoch_file(epoch)));
  };
  if (!args.quiet) {
    options.on_epoch = [&](const EpochMetrics& t, const EpochMetrics* v) { print_epoch(args.epochs, t, v); };
  }
  const TrainResult result = imucaps::train(model, train_set, validation_set, options);

  ModelCheckpoint checkpoint{model.config(), model.params(), model.normalization(), result.optimizer,
                             args.seed,      result.epochs_run, args.batch_size};
  save_checkpoint(checkpoint, stage.path("checkpoint.bin"));
  write_metrics_csv(result.history, stage.path("metrics.csv"));
  write_text(stage.path("config.json"), model_config_to_json(model.config()));
  stage.commit();
  std::cout << "trained " << model.kind() << " for " << result.epochs_run
            << " epochs; outputs in " << args.out.string() << std::endl;
}

void eval(const EvalArgs& args) {
  require_file(args.checkpoint, "checkpoint");
  require_file(args.dataset, "dataset");
  const ModelCheckpoint checkpoint = load_checkpoint(args.checkpoint);
  const Classifier model = checkpoint.classifier();
  const WindowDataset data = load_window_dataset(args.dataset);
  check_dataset_matches(model, data);
  const auto windows = pick_subset(data, args.subset);
  if (windows.empty()) throw std::runtime_error("subset '" + args.subset + "' holds no windows");

  const EvalResult result = evaluate(model, windows, Phase::validation, checkpoint.epoch);
  std::vector<std::size_t> truth;
  for (const auto* w : windows) truth.push_back(w->label);

  StagedOutput stage(args.out);
  write_predictions_csv(result.predictions, stage.path("predictions.csv"));
  write_truth_csv(truth, stage.path("truth.csv"));
  write_metrics_csv({result.metrics}, stage.path("metrics.csv"));
  stage.commit();
  std::cout << "evaluated " << windows.size() << " windows: " << format_metrics(result.metrics) << std::endl;
}

void game(const GameArgs& args) {
  if (args.predictions.size() < 2) throw std::invalid_argument("game needs at least two prediction files");
  if (!args.names.empty() && args.names.size() != args.predictions.size()) {
    throw std::invalid_argument("--names must list one name per prediction file");
  }
  for (const auto& p : args.predictions) require_file(p, "prediction file");
  require_file(args.truth, "truth file");

  std::vector<PredictionSet> players;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < args.predictions.size(); ++i) {
    std::string name = args.names.empty() ? args.predictions[i].stem().string() : args.names[i];
    if (args.names.empty() && name == "predictions") {
      name = fs::absolute(args.predictions[i]).parent_path().filename().string();
    }
    while (!seen.insert(name).second) name += "_" + std::to_string(i + 1);
    players.push_back({name, read_predictions_csv(args.predictions[i])});
  }
  const std::vector<std::size_t> truth = read_predictions_csv(args.truth);
  const std::vector<GameReport> reports = run_pairwise(players, truth, args.classes);

  StagedOutput stage(args.out);
  for (const auto& report : reports) {
    const auto& a = std::find_if(players.begin(), players.end(), [&](const auto& p) { return p.player == report.player_a; })
                        ->predictions;
    const auto& b = std::find_if(players.begin(), players.end(), [&](const auto& p) { return p.player == report.player_b; })
                        ->predictions;
    write_game_report(report, stage.path(report.name + "_report.json"));
    write_outcome_log(report, truth, a, b, stage.path(report.name + "_outcomes.csv"));
    write_best_response_curve(report, stage.path(report.name + "_best_response.csv"));
    std::cout << report.name << ": " << report.player_a << " vs " << report.player_b << "  wins "
              << report.outcome.wins_a << '/' << report.outcome.wins_b << "  draws " << report.outcome.draws
              << "  nash (" << report.best_response_a << ", " << report.best_response_b << ")" << std::endl;
  }
  write_tournament_summary(reports, stage.path("summary.json"));
  stage.commit();
}

void dump_activations(const DumpArgs& args) {
  require_file(args.checkpoint, "checkpoint");
  require_file(args.dataset, "dataset");
  if (args.epochs.empty()) throw std::invalid_argument("no epochs requested");
  const ModelCheckpoint checkpoint = load_checkpoint(args.checkpoint);
  const WindowDataset data = load_window_dataset(args.dataset);

  // Replays training from the checkpoint's seed; identical inputs reproduce
  // the original run exactly, so the dumps match a live dump.
  Classifier model(checkpoint.config, checkpoint.seed);
  check_dataset_matches(model, data);
  const auto train_set = select(data, Subset::train);
  const auto validation_set = select(data, Subset::validation);
  if (train_set.empty()) throw std::runtime_error("dataset has no training windows");

  StagedOutput stage(args.out);
  TrainOptions options;
  options.epochs = *std::max_element(args.epochs.begin(), args.epochs.end());
  options.batch_size = checkpoint.batch_size;
  options.seed = checkpoint.seed;
  options.learning_rate = checkpoint.optimizer.learning_rate;
  options.dump_epochs = args.epochs;
  std::size_t written = 0;
  options.on_activations = [&](std::size_t epoch, const ActivationGrid& grid) {
    write_activation_grid(grid, stage.path(epoch_file(epoch)));
    ++written;
  };
  bool diverged = false;
  options.on_epoch = [&](const EpochMetrics& t, const EpochMetrics* v) {
    if (!args.quiet) print_epoch(options.epochs, t, v);
    if (t.epoch == checkpoint.epoch && !(model.params() == checkpoint.params)) diverged = true;
  };
  imucaps::train(model, train_set, validation_set, options);
  if (diverged) {
    throw std::runtime_error("replay diverged from the checkpoint at epoch " + std::to_string(checkpoint.epoch) +
                             "; the dataset differs from the one used for training");
  }
  stage.commit();
  std::cout << "wrote " << written << " activation grids to " << args.out.string() << std::endl;
}

}  // namespace imucaps::cli
