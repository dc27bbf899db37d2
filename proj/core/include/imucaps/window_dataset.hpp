#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "imucaps/tensor.hpp"

namespace imucaps {

/// Fixed-length 9-channel training example:
/// ax, ay, az, gx, gy, gz, roll, pitch, yaw (fused, degrees).
struct FeatureWindow {
  Tensor data;  // [channels x length]
  std::size_t label = 0;
};

inline constexpr std::size_t kFeatureChannels = 9;

enum class Subset : std::uint8_t { train = 0, validation = 1, unassigned = 2 };

/// Windows plus their train/validation assignment.
struct WindowDataset {
  std::size_t channels = kFeatureChannels;
  std::size_t length = 0;
  std::vector<FeatureWindow> windows;
  std::vector<Subset> subsets;  // parallel to windows

  std::size_t size() const noexcept { return windows.size(); }
  void add(FeatureWindow window, Subset subset = Subset::unassigned);
  std::vector<std::size_t> indices(Subset subset) const;
  bool has_assignment() const noexcept;
  /// Throws when any window deviates from channels x length or labels exceed `class_count`.
  void validate(std::size_t class_count = 0) const;
};

/// Stratified split: within each class, a seeded shuffle puts the first
/// round(fraction * n) items into train and the rest into validation.
std::vector<Subset> stratified_split(const std::vector<std::size_t>& labels, double train_fraction,
                                     std::uint64_t seed);

/// Binary window container, all integers and floats little-endian:
///
///   offset 0   char[8]  "IMUWIN01"
///          8   u64      count N
///         16   u64      channels C
///         24   u64      length L
///         32   f64[N*C*L] window data, window-major then channel then time
///          .   u32[N]   labels
///          .   u8[N]    subset (0 train, 1 validation, 2 unassigned)
void save_window_dataset(const WindowDataset& dataset, const std::filesystem::path& path);
WindowDataset load_window_dataset(const std::filesystem::path& path);

}  // namespace imucaps
