#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "imucaps/models.hpp"
#include "imucaps/optimizer.hpp"

namespace imucaps {

/// Everything needed to resume training or to replay it from scratch.
struct ModelCheckpoint {
  ModelConfig config;
  ParamSet params;
  InputNormalization normalization;
  OptimizerState optimizer;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;       // epochs completed
  std::size_t batch_size = 32;

  Classifier classifier() const;
};

/// Config as a JSON object with a "kind" of "capsnet" or "cnn". Missing
/// fields take the struct defaults; unknown fields are rejected.
std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

/// Checkpoint file, integers and floats little-endian:
///
///   char[8]  "IMUCKPT1"
///   u64      header byte count H
///   char[H]  JSON header: config, seed, epoch, batch_size, optimizer scalars
///   u64      tensor count N
///   N times: u32 name length, name bytes, u32 rank, u64[rank] extents, f64[numel] values
///
/// Tensor names: "param/<name>", "adam.m/<name>", "adam.v/<name>",
/// "adam.vmax/<name>", "input.mean", "input.scale". Round trips are bit-exact.
void save_checkpoint(const ModelCheckpoint& checkpoint, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace imucaps
