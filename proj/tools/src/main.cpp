#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace cli = imucaps::cli;

int main(int argc, char** argv) {
  CLI::App app{"imucaps: IMU gesture capsule-network pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML run config; flags override it, it overrides defaults");

  cli::GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate synthetic raw recordings and a manifest");
  gen_cmd->add_option("--out", gen.out, "Output directory")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--scale", gen.scale, "desk (2 subjects x 5 reps) or full (10 x 10)")
      ->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();
  gen_cmd->add_option("--classes", gen.classes, "Sentence classes")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--subjects", gen.subjects, "Override subject count")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--repetitions", gen.repetitions, "Override repetitions per subject")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--accel-noise", gen.accel_noise, "Accel noise std, m/s^2")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--gyro-noise", gen.gyro_noise, "Gyro noise std, deg/s")->check(CLI::NonNegativeNumber);

  cli::PreprocessArgs pre;
  bool no_pad = false;
  auto* pre_cmd = app.add_subcommand("preprocess", "Filter, calibrate, fuse and window raw recordings");
  pre_cmd->add_option("--raw", pre.raw, "Directory holding manifest.json and recordings")->capture_default_str();
  pre_cmd->add_option("--calibration", pre.calibration, "Calibration JSON (identity when omitted)");
  pre_cmd->add_option("--out", pre.out, "Window dataset file")->capture_default_str();
  pre_cmd->add_option("--window-length", pre.window_length, "Samples per window")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pre_cmd->add_option("--stride", pre.stride, "Samples between windows (0 = window length)")->capture_default_str();
  pre_cmd->add_option("--beta", pre.beta, "Complementary filter gyro weight")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  pre_cmd->add_option("--median-window", pre.median_window, "Odd median filter width")->capture_default_str();
  pre_cmd->add_flag("--no-pad", no_pad, "Reject recordings shorter than the window instead of padding");
  pre_cmd->add_option("--seed", pre.seed, "Split seed when the manifest has no assignment")->capture_default_str();

  cli::TrainArgs tr;
  std::optional<double> stop_at;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier preset");
  train_cmd->add_option("--dataset", tr.dataset, "Window dataset file")->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Run directory")->capture_default_str();
  train_cmd->add_option("--preset", tr.preset, "capsnet-3, capsnet-5 or cnn")
      ->check(CLI::IsMember({"capsnet-3", "capsnet-5", "cnn"}))
      ->capture_default_str();
  train_cmd->add_option("--model-config", tr.model_config, "Architecture JSON, replaces the preset");
  train_cmd->add_option("--seed", tr.seed, "Initialization and shuffling seed")->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.batch_size, "Mini-batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--learning-rate", tr.learning_rate, "Adam learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--routing-iterations", tr.routing_iterations, "Override routing iterations")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--classes", tr.classes, "Class count")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--fc-units", tr.fc_units, "Override the capsule network's dense layer width")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--output-activation", tr.output_activation, "sigmoid or softmax")
      ->check(CLI::IsMember({"sigmoid", "softmax"}))
      ->capture_default_str();
  train_cmd->add_option("--stop-at-accuracy", stop_at, "Stop once training accuracy reaches this value")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--dump-epochs", tr.dump_epochs, "Epochs after which to write activation grids");
  train_cmd->add_flag("--quiet", tr.quiet, "Suppress per-epoch lines");

  cli::EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Predict with a checkpoint");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->capture_default_str();
  eval_cmd->add_option("--dataset", ev.dataset, "Window dataset file")->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "Output directory")->capture_default_str();
  eval_cmd->add_option("--subset", ev.subset, "train, validation or all")
      ->check(CLI::IsMember({"train", "validation", "all"}))
      ->capture_default_str();

  cli::GameArgs gm;
  auto* game_cmd = app.add_subcommand("game", "Play pairwise pick games between prediction files");
  game_cmd->add_option("--predictions", gm.predictions, "Prediction files, in player order")
      ->required()
      ->expected(2, -1);
  game_cmd->add_option("--names", gm.names, "Player names, one per prediction file");
  game_cmd->add_option("--truth", gm.truth, "Truth file")->required();
  game_cmd->add_option("--out", gm.out, "Output directory")->capture_default_str();
  game_cmd->add_option("--classes", gm.classes, "Class count")->check(CLI::PositiveNumber)->capture_default_str();

  cli::DumpArgs dump;
  auto* dump_cmd = app.add_subcommand("dump-activations", "Replay training and write activation grids");
  dump_cmd->add_option("--checkpoint", dump.checkpoint, "Checkpoint file")->capture_default_str();
  dump_cmd->add_option("--dataset", dump.dataset, "Window dataset the checkpoint was trained on")
      ->capture_default_str();
  dump_cmd->add_option("--out", dump.out, "Output directory")->capture_default_str();
  dump_cmd->add_option("--epochs", dump.epochs, "Epochs to dump")->capture_default_str();
  dump_cmd->add_flag("--quiet", dump.quiet, "Suppress per-epoch lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen_cmd) cli::gen_data(gen);
    if (*pre_cmd) {
      pre.pad_short = !no_pad;
      cli::preprocess(pre);
    }
    if (*train_cmd) {
      tr.stop_at_train_accuracy = stop_at;
      cli::train(tr);
    }
    if (*eval_cmd) cli::eval(ev);
    if (*game_cmd) cli::game(gm);
    if (*dump_cmd) cli::dump_activations(dump);
  } catch (const std::exception& e) {
    std::cerr << "imucaps: error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
