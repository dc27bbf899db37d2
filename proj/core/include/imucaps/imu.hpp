#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "imucaps/tensor.hpp"
#include "imucaps/window_dataset.hpp"

namespace imucaps {

/// Raw six-channel inertial stream at a fixed rate.
struct ImuRecording {
  double sample_rate = 100.0;  // Hz
  Tensor accel;                // [3 x T], m/s^2
  Tensor gyro;                 // [3 x T], deg/s
  std::optional<std::size_t> label;
  std::size_t subject = 0;
  std::size_t repetition = 0;

  std::size_t samples() const noexcept { return accel.empty() ? 0 : accel.dim(1); }
  void validate() const;
};

/// corrected_accel = M * (raw - bias); corrected_gyro = scale * (raw - bias).
struct CalibrationParams {
  std::array<double, 3> accel_bias{0.0, 0.0, 0.0};
  std::array<double, 9> accel_matrix{1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0};  // row-major
  std::array<double, 3> gyro_bias{0.0, 0.0, 0.0};
  std::array<double, 3> gyro_scale{1.0, 1.0, 1.0};

  /// Throws on a singular accel matrix, a zero gyro scale, or non-finite values.
  void validate() const;
};

/// Centered sliding median. The window shrinks at the edges to the samples
/// available; an even count takes the mean of the two middle values.
Tensor moving_median(const Tensor& signal, std::size_t window);

/// Median filter on every accel and gyro channel.
ImuRecording median_filter(const ImuRecording& recording, std::size_t window);

ImuRecording apply_calibration(const ImuRecording& recording, const CalibrationParams& params);

/// Maps any angle in degrees to (-180, 180].
double wrap_degrees(double degrees);

struct AccelAngles {
  Tensor angles;                      // [2 x T]: roll, pitch in degrees
  std::vector<std::size_t> flagged;   // samples with a zero acceleration vector
};

/// roll = atan2(ax, sqrt(ay^2 + az^2)), pitch = atan2(ay, sqrt(ax^2 + az^2)).
/// A zero vector repeats the previous sample's angles (zero at t = 0).
AccelAngles accel_angles(const Tensor& accel);

/// Rectangular running sum G[t] = G[t-1] + w[t] * dt with G[0] = w[0] * dt,
/// accumulated unwrapped and reported wrapped to (-180, 180]. [3 x T] in and out.
Tensor gyro_integrate(const Tensor& gyro, double dt);

/// E = beta * G + (1 - beta) * A for roll and pitch; yaw is G's yaw.
/// `gyro_angles` is [3 x T], `accel_angles` [2 x T]; beta in [0, 1].
Tensor complementary_filter(const Tensor& gyro_angles, const Tensor& accel_angles, double beta);

/// [9 x T]: ax, ay, az, gx, gy, gz, fused roll, pitch, yaw.
Tensor fuse_channels(const ImuRecording& recording, double beta);

/// Windows of length `length` every `stride` samples over the fused channels,
/// in temporal order. Requires a labeled recording with T >= length.
std::vector<FeatureWindow> build_windows(const ImuRecording& recording, std::size_t length, std::size_t stride,
                                         double beta);

/// Extends a recording to `length` samples. Accel holds the mean of the last
/// `tail` samples, gyro is zero. Recordings already long enough are returned unchanged.
ImuRecording pad_recording(const ImuRecording& recording, std::size_t length, std::size_t tail = 10);

struct PreprocessOptions {
  std::size_t median_window = 5;
  CalibrationParams calibration;
  double beta = 0.85;
  std::size_t window_length = 2000;
  std::size_t stride = 0;  // 0 means window_length
  bool pad_short = false;
};

/// median filter -> calibration -> optional padding -> fusion -> windows.
std::vector<FeatureWindow> preprocess_recording(const ImuRecording& raw, const PreprocessOptions& options);

}  // namespace imucaps
