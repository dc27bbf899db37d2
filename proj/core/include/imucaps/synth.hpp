#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "imucaps/imu.hpp"
#include "imucaps/imu_io.hpp"
#include "imucaps/window_dataset.hpp"

namespace imucaps {

inline constexpr double kGravity = 9.81;
inline constexpr double kAccelBound = 20.0;  // m/s^2, per axis
inline constexpr double kGyroBound = 300.0;  // deg/s, per axis

struct SineComponent {
  double amplitude = 0.0;
  double cycles = 1.0;  // full periods across the primitive
  double phase = 0.0;   // radians
};

/// One sign: six channel templates (ax, ay, az, gx, gy, gz) under a Hann
/// envelope, so the motion starts and ends at rest.
struct SignPrimitive {
  std::size_t id = 0;
  double duration = 1.0;  // seconds, in [0.5, 2.0]
  std::array<std::vector<SineComponent>, 6> channels;

  /// Template value of `channel` at normalized time u in [0, 1].
  double value(std::size_t channel, double u) const;
};

struct SentenceSpec {
  std::size_t class_id = 0;
  std::vector<std::size_t> primitives;  // 2 to 4 inventory ids
  std::string sentence_type;            // "assertive" or "interrogative"
};

struct GeneratorConfig {
  std::uint64_t seed = 1;
  std::size_t class_count = 20;
  std::size_t subjects = 10;
  std::size_t repetitions = 10;
  double accel_noise = 0.5;  // std, m/s^2
  double gyro_noise = 5.0;   // std, deg/s
  double sample_rate = 100.0;
  double gap_seconds = 1.0;
  /// Subject and repetition tempo factors are each drawn from [1 - j, 1 + j].
  double tempo_jitter = 0.04;
  /// Subject amplitude factor drawn from [1 - j, 1 + j].
  double amplitude_jitter = 0.1;
  double train_fraction = 0.8;

  static GeneratorConfig desk();  // 2 subjects x 5 repetitions
  static GeneratorConfig full();  // 10 subjects x 10 repetitions
  void validate() const;
};

/// Fixed sign inventory, identical for every seed.
const std::vector<SignPrimitive>& primitive_inventory();

/// Distinct primitive sequences for classes 0 .. class_count-1. The first
/// 12 classes are assertive, the rest interrogative.
std::vector<SentenceSpec> sentence_specs(std::size_t class_count);

/// Deterministic in (config.seed, class, subject, repetition).
ImuRecording generate_sentence(const SentenceSpec& spec, std::size_t subject, std::size_t repetition,
                               const GeneratorConfig& config,
                               const std::vector<SignPrimitive>& inventory = primitive_inventory());

struct GeneratedDataset {
  Manifest manifest;
  std::vector<ImuRecording> recordings;  // parallel to manifest.recordings
};

/// All recordings, ordered by class, subject, repetition, with a stratified
/// train/validation split recorded in the manifest.
GeneratedDataset generate_dataset(const GeneratorConfig& config);

/// Writes one CSV per recording plus manifest.json into `directory`.
void write_generated_dataset(const GeneratedDataset& dataset, const std::filesystem::path& directory);

/// Accuracy on `test` of assigning each window to the class whose mean
/// training window is nearest in Euclidean distance.
double nearest_centroid_accuracy(const std::vector<const FeatureWindow*>& train,
                                 const std::vector<const FeatureWindow*>& test);

}  // namespace imucaps
