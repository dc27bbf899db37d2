#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace imucaps::cli {

namespace fs = std::filesystem;

struct GenDataArgs {
  fs::path out = "data/raw";
  std::uint64_t seed = 1;
  std::string scale = "desk";  // desk | full
  std::size_t classes = 20;
  std::optional<std::size_t> subjects;
  std::optional<std::size_t> repetitions;
  std::optional<double> accel_noise;
  std::optional<double> gyro_noise;
};

struct PreprocessArgs {
  fs::path raw = "data/raw";  // directory holding manifest.json
  std::optional<fs::path> calibration;
  fs::path out = "data/windows.bin";
  std::size_t window_length = 700;
  std::size_t stride = 0;  // 0 means window_length
  double beta = 0.85;
  std::size_t median_window = 5;
  bool pad_short = true;
  std::uint64_t seed = 1;  // split seed when the manifest carries no assignment
};

struct TrainArgs {
  fs::path dataset = "data/windows.bin";
  fs::path out = "runs/model";
  std::string preset = "capsnet-3";
  std::optional<fs::path> model_config;  // JSON architecture overrides the preset
  std::uint64_t seed = 1;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::optional<std::size_t> routing_iterations;
  std::size_t classes = 20;
  std::optional<std::size_t> fc_units;
  std::string output_activation = "sigmoid";
  std::optional<double> stop_at_train_accuracy;
  std::vector<std::size_t> dump_epochs;
  bool quiet = false;
};

struct EvalArgs {
  fs::path checkpoint = "runs/model/checkpoint.bin";
  fs::path dataset = "data/windows.bin";
  fs::path out = "runs/model/eval";
  std::string subset = "validation";  // train | validation | all
};

struct GameArgs {
  std::vector<fs::path> predictions;  // 2 or more files
  std::vector<std::string> names;     // defaults to file stems
  fs::path truth;
  fs::path out = "runs/game";
  std::size_t classes = 20;
};

struct DumpArgs {
  fs::path checkpoint = "runs/model/checkpoint.bin";
  fs::path dataset = "data/windows.bin";
  fs::path out = "runs/model/activations";
  std::vector<std::size_t> epochs{1, 10, 20, 30, 40};
  bool quiet = false;
};

void gen_data(const GenDataArgs& args);
void preprocess(const PreprocessArgs& args);
void train(const TrainArgs& args);
void eval(const EvalArgs& args);
void game(const GameArgs& args);
void dump_activations(const DumpArgs& args);

/// Output files are written under a hidden staging directory next to the
/// destination and moved into place by commit(). Without commit() the
/// staging directory is removed and the destination is left untouched.
class StagedOutput {
 public:
  explicit StagedOutput(fs::path destination);
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;
  ~StagedOutput();

  fs::path path(const std::string& name) const;
  void commit();

 private:
  fs::path destination_;
  fs::path staging_;
  bool committed_ = false;
};

/// Same contract for a single output file.
class StagedFile {
 public:
  explicit StagedFile(fs::path destination);
  StagedFile(const StagedFile&) = delete;
  StagedFile& operator=(const StagedFile&) = delete;
  ~StagedFile();

  const fs::path& path() const noexcept { return staging_; }
  void commit();

 private:
  fs::path destination_;
  fs::path staging_;
  bool committed_ = false;
};

}  // namespace imucaps::cli
