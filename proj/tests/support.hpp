#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "imucaps/models.hpp"
#include "imucaps/tensor.hpp"

namespace imucaps::testing {

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (auto& v : t.values()) v = dist(engine);
  return t;
}

inline CapsNetConfig tiny_capsnet() {
  CapsNetConfig c;
  c.input_channels = 3;
  c.input_length = 40;
  c.conv1_filters = 4;
  c.kernel_length = 5;
  c.primary_channels = 2;
  c.capsule_dim = 2;
  c.primary_stride = 2;
  c.class_count = 2;
  c.digit_dim_per_class = 3;
  c.routing_iterations = 3;
  c.fc_units = 4;
  return c;
}

inline CnnConfig tiny_cnn() {
  CnnConfig c;
  c.input_channels = 3;
  c.input_length = 40;
  c.conv1_filters = 4;
  c.conv2_filters = 5;
  c.kernel_length = 3;
  c.pool_size = 2;
  c.hidden_units = 6;
  c.class_count = 3;
  return c;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("imucaps-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace imucaps::testing
