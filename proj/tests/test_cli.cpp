#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>

#include "commands.hpp"
#include "imucaps/checkpoint.hpp"
#include "imucaps/game.hpp"
#include "imucaps/trainer.hpp"
#include "imucaps/window_dataset.hpp"
#include "support.hpp"

using namespace imucaps;
using imucaps::testing::random_tensor;
using imucaps::testing::TempDir;

namespace {

constexpr std::size_t kLength = 40;

// Three classes whose windows differ by a per-class offset.
void write_tiny_dataset(const std::filesystem::path& path, std::size_t classes = 3) {
  WindowDataset data;
  data.length = kLength;
  std::uint64_t seed = 1;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < 6; ++i) {
      Tensor w = random_tensor({kFeatureChannels, kLength}, seed++, -0.5, 0.5);
      for (auto& v : w.values()) v += static_cast<double>(c);
      data.add({std::move(w), c}, i < 4 ? Subset::train : Subset::validation);
    }
  }
  save_window_dataset(data, path);
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int run_tool(const std::string& args) {
  const std::string command = std::string(IMUCAPS_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

cli::TrainArgs tiny_train(const TempDir& dir) {
  cli::TrainArgs args;
  args.dataset = dir / "windows.bin";
  args.out = dir / "run";
  args.preset = "cnn";
  args.classes = 3;
  args.epochs = 2;
  args.batch_size = 4;
  args.quiet = true;
  return args;
}

}  // namespace

TEST(StagedOutput, CommitMovesFilesAndDropsStaging) {
  TempDir dir("stage");
  {
    cli::StagedOutput stage(dir / "out");
    std::ofstream(stage.path("a.txt")) << "a";
    std::ofstream(stage.path("b.txt")) << "b";
    EXPECT_FALSE(std::filesystem::exists(dir / "out"));
    stage.commit();
  }
  EXPECT_EQ(read_all(dir / "out" / "a.txt"), "a");
  EXPECT_EQ(read_all(dir / "out" / "b.txt"), "b");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1u);
}

TEST(StagedOutput, AbandonedStageLeavesNothing) {
  TempDir dir("stage");
  {
    cli::StagedOutput stage(dir / "out");
    std::ofstream(stage.path("a.txt")) << "a";
    cli::StagedFile file(dir / "single.csv");
    std::ofstream(file.path()) << "x";
  }
  EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}

TEST(StagedFile, CommitReplacesDestination) {
  TempDir dir("stage");
  std::ofstream(dir / "f.txt") << "old";
  {
    cli::StagedFile file(dir / "f.txt");
    std::ofstream(file.path()) << "new";
    file.commit();
  }
  EXPECT_EQ(read_all(dir / "f.txt"), "new");
}

TEST(TrainCommand, WritesRunDirectory) {
  TempDir dir("train");
  write_tiny_dataset(dir / "windows.bin");
  cli::TrainArgs args = tiny_train(dir);
  args.dump_epochs = {1, 2};
  cli::train(args);
  EXPECT_EQ(read_metrics_csv(dir / "run" / "metrics.csv").size(), 4u);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "activations_epoch_001.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "activations_epoch_002.csv"));
  const ModelCheckpoint ckpt = load_checkpoint(dir / "run" / "checkpoint.bin");
  EXPECT_EQ(ckpt.epoch, 2u);
  EXPECT_EQ(ckpt.classifier().class_count(), 3u);
}

TEST(TrainCommand, FailureLeavesNoPartialOutput) {
  TempDir dir("train");
  write_tiny_dataset(dir / "windows.bin", 4);
  EXPECT_ANY_THROW(cli::train(tiny_train(dir)));
  EXPECT_FALSE(std::filesystem::exists(dir / "run"));

  cli::TrainArgs missing = tiny_train(dir);
  missing.dataset = dir / "absent.bin";
  EXPECT_ANY_THROW(cli::train(missing));
  EXPECT_FALSE(std::filesystem::exists(dir / "run"));
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1u);
}

TEST(EvalAndGame, IdenticalPredictionFilesOnlyDraw) {
  TempDir dir("game");
  write_tiny_dataset(dir / "windows.bin");
  cli::train(tiny_train(dir));

  cli::EvalArgs eval;
  eval.checkpoint = dir / "run" / "checkpoint.bin";
  eval.dataset = dir / "windows.bin";
  eval.out = dir / "eval";
  cli::eval(eval);
  const auto predictions = read_predictions_csv(dir / "eval" / "predictions.csv");
  ASSERT_EQ(predictions.size(), 6u);

  std::filesystem::copy_file(dir / "eval" / "predictions.csv", dir / "copy.csv");
  cli::GameArgs game;
  game.predictions = {dir / "eval" / "predictions.csv", dir / "copy.csv"};
  game.names = {"first", "second"};
  game.truth = dir / "eval" / "truth.csv";
  game.out = dir / "game";
  game.classes = 3;
  cli::game(game);
  const auto report = nlohmann::json::parse(read_all(dir / "game" / "W1_report.json"));
  EXPECT_EQ(report["draws"], 6);
  EXPECT_EQ(report["wins"][0], 0);
  EXPECT_EQ(report["wins"][1], 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "game" / "summary.json"));
}

TEST(DumpActivations, ReplayMatchesTrainingGrids) {
  TempDir dir("dump");
  write_tiny_dataset(dir / "windows.bin");
  cli::TrainArgs args = tiny_train(dir);
  args.dump_epochs = {1, 2};
  cli::train(args);

  cli::DumpArgs dump;
  dump.checkpoint = dir / "run" / "checkpoint.bin";
  dump.dataset = dir / "windows.bin";
  dump.out = dir / "replay";
  dump.epochs = {1, 2};
  dump.quiet = true;
  cli::dump_activations(dump);
  for (const char* name : {"activations_epoch_001.csv", "activations_epoch_002.csv"}) {
    EXPECT_EQ(read_all(dir / "replay" / name), read_all(dir / "run" / name)) << name;
  }
}

TEST(Binary, FlagsOverrideConfigWhichOverridesDefaults) {
  TempDir dir("binary");
  write_tiny_dataset(dir / "windows.bin");
  std::ofstream(dir / "run.toml") << "[train]\npreset = \"cnn\"\nclasses = 3\nepochs = 3\nbatch-size = 4\nquiet = true\n";
  const std::string common = "train --config " + (dir / "run.toml").string() + " --dataset " +
                             (dir / "windows.bin").string();

  ASSERT_EQ(run_tool(common + " --out " + (dir / "from_config").string()), 0);
  EXPECT_EQ(read_metrics_csv(dir / "from_config" / "metrics.csv").size(), 6u);
  const auto model = nlohmann::json::parse(read_all(dir / "from_config" / "config.json"));
  EXPECT_EQ(model["kind"], "cnn");
  EXPECT_EQ(model["class_count"], 3);

  ASSERT_EQ(run_tool(common + " --epochs 1 --out " + (dir / "from_flag").string()), 0);
  EXPECT_EQ(read_metrics_csv(dir / "from_flag" / "metrics.csv").size(), 2u);

  ASSERT_EQ(run_tool("train --dataset " + (dir / "windows.bin").string() + " --classes 3 --epochs 1 --quiet --out " +
                     (dir / "defaults").string()),
            0);
  EXPECT_EQ(nlohmann::json::parse(read_all(dir / "defaults" / "config.json"))["kind"], "capsnet");
}

TEST(Binary, ErrorsExitNonZeroWithoutOutputs) {
  TempDir dir("binary");
  EXPECT_NE(run_tool("train --dataset " + (dir / "absent.bin").string() + " --out " + (dir / "run").string()), 0);
  EXPECT_FALSE(std::filesystem::exists(dir / "run"));
  EXPECT_NE(run_tool("bogus-command"), 0);
}
