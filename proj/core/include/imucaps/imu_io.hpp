#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "imucaps/imu.hpp"
#include "imucaps/window_dataset.hpp"

namespace imucaps {

/// Comma-separated with header `t,ax,ay,az,gx,gy,gz`; t = index / sample_rate.
void write_recording_csv(const ImuRecording& recording, const std::filesystem::path& path);
/// Reads samples only; the rate is checked against the t column when it has two or more rows.
ImuRecording read_recording_csv(const std::filesystem::path& path, double sample_rate = 100.0);

struct ManifestEntry {
  std::string file;  // relative to the manifest directory
  std::size_t label = 0;
  std::size_t subject = 0;
  std::size_t repetition = 0;
  Subset subset = Subset::unassigned;
  std::string sentence_type;  // free-form metadata
};

/// Sidecar listing of raw recordings, stored as JSON:
///
///   {"sample_rate": 100, "class_count": 20, "seed": 1,
///    "recordings": [{"file": "...", "class": 0, "subject": 0, "repetition": 0,
///                    "subset": "train", "sentence_type": "assertive"}, ...]}
struct Manifest {
  double sample_rate = 100.0;
  std::size_t class_count = 0;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> recordings;
};

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

std::string to_string(Subset subset);
Subset subset_from_string(const std::string& name);

/// {"accel": {"bias": [3], "matrix": [9]}, "gyro": {"bias": [3], "scale": [3]}}
void write_calibration(const CalibrationParams& params, const std::filesystem::path& path);
CalibrationParams read_calibration(const std::filesystem::path& path);

}  // namespace imucaps
