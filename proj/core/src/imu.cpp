#include "imucaps/imu.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace imucaps {

namespace {

constexpr double kDegrees = 180.0 / std::numbers::pi;

bool finite_array(const auto& values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double determinant3(const std::array<double, 9>& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6]);
}

void require_rows(const Tensor& t, std::size_t rows, const char* what) {
  if (t.rank() != 2 || t.dim(0) != rows) {
    throw ShapeError(std::string(what) + " must be [" + std::to_string(rows) + " x T], got " +
                     shape_to_string(t.shape()));
  }
}

}  // namespace

void ImuRecording::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw std::invalid_argument("sample rate must be positive");
  require_rows(accel, 3, "accel");
  require_rows(gyro, 3, "gyro");
  if (accel.dim(1) != gyro.dim(1)) throw ShapeError("accel and gyro sample counts differ");
}

void CalibrationParams::validate() const {
  if (!finite_array(accel_bias) || !finite_array(accel_matrix) || !finite_array(gyro_bias) ||
      !finite_array(gyro_scale)) {
    throw std::invalid_argument("calibration parameters must be finite");
  }
  const double scale = *std::max_element(accel_matrix.begin(), accel_matrix.end(),
                                         [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (std::abs(determinant3(accel_matrix)) <= 1e-12 * std::max(1.0, std::pow(std::abs(scale), 3))) {
    throw std::invalid_argument("accel calibration matrix is singular");
  }
  for (double s : gyro_scale) {
    if (s == 0.0) throw std::invalid_argument("gyro scale factors must be nonzero");
  }
}

Tensor moving_median(const Tensor& signal, std::size_t window) {
  if (signal.rank() != 1) throw ShapeError("moving_median expects a 1-D signal");
  if (window == 0 || window % 2 == 0) throw std::invalid_argument("median window must be odd and positive");
  const std::size_t n = signal.size();
  if (window > n) throw std::invalid_argument("median window longer than the signal");
  const std::size_t half = window / 2;
  Tensor out({n});
  std::vector<double> buffer;
  buffer.reserve(window);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(n - 1, t + half);
    buffer.assign(signal.data() + lo, signal.data() + hi + 1);
    std::sort(buffer.begin(), buffer.end());
    const std::size_t m = buffer.size();
    out[t] = m % 2 ? buffer[m / 2] : 0.5 * (buffer[m / 2 - 1] + buffer[m / 2]);
  }
  return out;
}

namespace {

Tensor filter_rows(const Tensor& rows, std::size_t window) {
  Tensor out(rows.shape());
  const std::size_t n = rows.dim(1);
  for (std::size_t c = 0; c < rows.dim(0); ++c) {
    const Tensor filtered = moving_median(Tensor({n}, std::vector<double>(rows.row(c).begin(), rows.row(c).end())), window);
    std::copy(filtered.values().begin(), filtered.values().end(), out.data() + c * n);
  }
  return out;
}

}  // namespace

ImuRecording median_filter(const ImuRecording& recording, std::size_t window) {
  recording.validate();
  ImuRecording out = recording;
  out.accel = filter_rows(recording.accel, window);
  out.gyro = filter_rows(recording.gyro, window);
  return out;
}

ImuRecording apply_calibration(const ImuRecording& recording, const CalibrationParams& params) {
  recording.validate();
  params.validate();
  ImuRecording out = recording;
  const std::size_t n = recording.samples();
  const auto& m = params.accel_matrix;
  for (std::size_t t = 0; t < n; ++t) {
    double centered[3];
    for (std::size_t i = 0; i < 3; ++i) centered[i] = recording.accel.at(i, t) - params.accel_bias[i];
    for (std::size_t i = 0; i < 3; ++i) {
      out.accel.at(i, t) = m[3 * i] * centered[0] + m[3 * i + 1] * centered[1] + m[3 * i + 2] * centered[2];
    }
    for (std::size_t i = 0; i < 3; ++i) {
      out.gyro.at(i, t) = params.gyro_scale[i] * (recording.gyro.at(i, t) - params.gyro_bias[i]);
    }
  }
  return out;
}

double wrap_degrees(double degrees) { return degrees - 360.0 * std::ceil((degrees - 180.0) / 360.0); }

AccelAngles accel_angles(const Tensor& accel) {
  require_rows(accel, 3, "accel");
  const std::size_t n = accel.dim(1);
  AccelAngles result{Tensor({2, n}), {}};
  double roll = 0.0;
  double pitch = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double ax = accel.at(0, t);
    const double ay = accel.at(1, t);
    const double az = accel.at(2, t);
    if (ax == 0.0 && ay == 0.0 && az == 0.0) {
      result.flagged.push_back(t);
    } else {
      roll = std::atan2(ax, std::sqrt(ay * ay + az * az)) * kDegrees;
      pitch = std::atan2(ay, std::sqrt(ax * ax + az * az)) * kDegrees;
    }
    result.angles.at(0, t) = roll;
    result.angles.at(1, t) = pitch;
  }
  return result;
}

Tensor gyro_integrate(const Tensor& gyro, double dt) {
  require_rows(gyro, 3, "gyro");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("integration step must be positive");
  const std::size_t n = gyro.dim(1);
  Tensor out({3, n});
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      sum += gyro.at(c, t) * dt;
      out.at(c, t) = wrap_degrees(sum);
    }
  }
  return out;
}

Tensor complementary_filter(const Tensor& gyro_angles, const Tensor& accel_angles, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("complementary filter weight must lie in [0, 1]");
  require_rows(gyro_angles, 3, "gyro angles");
  require_rows(accel_angles, 2, "accel angles");
  const std::size_t n = gyro_angles.dim(1);
  if (accel_angles.dim(1) != n) throw ShapeError("gyro and accel angle lengths differ");
  Tensor out = gyro_angles;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t t = 0; t < n; ++t) {
      out.at(c, t) = beta * gyro_angles.at(c, t) + (1.0 - beta) * accel_angles.at(c, t);
    }
  }
  return out;
}

Tensor fuse_channels(const ImuRecording& recording, double beta) {
  recording.validate();
  const std::size_t n = recording.samples();
  const Tensor fused =
      complementary_filter(gyro_integrate(recording.gyro, 1.0 / recording.sample_rate),
                           accel_angles(recording.accel).angles, beta);
  Tensor out({kFeatureChannels, n});
  std::copy(recording.accel.values().begin(), recording.accel.values().end(), out.data());
  std::copy(recording.gyro.values().begin(), recording.gyro.values().end(), out.data() + 3 * n);
  std::copy(fused.values().begin(), fused.values().end(), out.data() + 6 * n);
  return out;
}

std::vector<FeatureWindow> build_windows(const ImuRecording& recording, std::size_t length, std::size_t stride,
                                         double beta) {
  recording.validate();
  if (!recording.label) throw std::invalid_argument("recording has no label");
  if (length == 0 || stride == 0) throw std::invalid_argument("window length and stride must be positive");
  const std::size_t n = recording.samples();
  if (n < length) {
    throw std::invalid_argument("recording has " + std::to_string(n) + " samples, shorter than window length " +
                                std::to_string(length));
  }
  const Tensor features = fuse_channels(recording, beta);
  const std::size_t count = (n - length) / stride + 1;
  std::vector<FeatureWindow> windows;
  windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    FeatureWindow window{Tensor({kFeatureChannels, length}), *recording.label};
    for (std::size_t c = 0; c < kFeatureChannels; ++c) {
      const double* src = features.data() + c * n + w * stride;
      std::copy(src, src + length, window.data.data() + c * length);
    }
    windows.push_back(std::move(window));
  }
  return windows;
}

ImuRecording pad_recording(const ImuRecording& recording, std::size_t length, std::size_t tail) {
  recording.validate();
  const std::size_t n = recording.samples();
  if (n >= length) return recording;
  if (n == 0) throw std::invalid_argument("cannot pad an empty recording");
  const std::size_t span = std::clamp<std::size_t>(tail, 1, n);
  ImuRecording out = recording;
  out.accel = Tensor({3, length});
  out.gyro = Tensor({3, length});
  for (std::size_t c = 0; c < 3; ++c) {
    double hold = 0.0;
    for (std::size_t t = n - span; t < n; ++t) hold += recording.accel.at(c, t);
    hold /= static_cast<double>(span);
    for (std::size_t t = 0; t < length; ++t) {
      out.accel.at(c, t) = t < n ? recording.accel.at(c, t) : hold;
      out.gyro.at(c, t) = t < n ? recording.gyro.at(c, t) : 0.0;
    }
  }
  return out;
}

std::vector<FeatureWindow> preprocess_recording(const ImuRecording& raw, const PreprocessOptions& options) {
  ImuRecording rec = apply_calibration(median_filter(raw, options.median_window), options.calibration);
  if (options.pad_short) rec = pad_recording(rec, options.window_length);
  const std::size_t stride = options.stride ? options.stride : options.window_length;
  return build_windows(rec, options.window_length, stride, options.beta);
}

}  // namespace imucaps
