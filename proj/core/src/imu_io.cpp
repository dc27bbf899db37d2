#include "imucaps/imu_io.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "text_io.hpp"

namespace imucaps {

using nlohmann::json;

void write_recording_csv(const ImuRecording& recording, const std::filesystem::path& path) {
  recording.validate();
  auto out = text::open_for_write(path);
  out << "t,ax,ay,az,gx,gy,gz\n";
  for (std::size_t t = 0; t < recording.samples(); ++t) {
    out << text::format_double(static_cast<double>(t) / recording.sample_rate);
    for (std::size_t c = 0; c < 3; ++c) out << ',' << text::format_double(recording.accel.at(c, t));
    for (std::size_t c = 0; c < 3; ++c) out << ',' << text::format_double(recording.gyro.at(c, t));
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ImuRecording read_recording_csv(const std::filesystem::path& path, double sample_rate) {
  auto in = text::open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  if (text::trim(line) != "t,ax,ay,az,gx,gy,gz") {
    throw std::runtime_error(path.string() + ": expected header t,ax,ay,az,gx,gy,gz");
  }
  std::vector<double> times;
  std::vector<std::array<double, 6>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 7) throw std::runtime_error(where + ": expected 7 fields");
    times.push_back(text::parse_double(fields[0], where));
    std::array<double, 6> row{};
    for (std::size_t c = 0; c < 6; ++c) {
      row[c] = text::parse_double(fields[c + 1], where);
      if (!std::isfinite(row[c])) throw std::runtime_error(where + ": non-finite sample");
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": no samples");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::runtime_error(path.string() + ": time column is not increasing");
  }
  if (times.size() >= 2) {
    const double observed = static_cast<double>(times.size() - 1) / (times.back() - times.front());
    if (std::abs(observed - sample_rate) > 0.01 * sample_rate) {
      throw std::runtime_error(path.string() + ": time column implies " + text::format_double(observed) +
                               " Hz, expected " + text::format_double(sample_rate));
    }
  }

  ImuRecording rec;
  rec.sample_rate = sample_rate;
  rec.accel = Tensor({3, rows.size()});
  rec.gyro = Tensor({3, rows.size()});
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t c = 0; c < 3; ++c) {
      rec.accel.at(c, t) = rows[t][c];
      rec.gyro.at(c, t) = rows[t][c + 3];
    }
  }
  return rec;
}

std::string to_string(Subset subset) {
  switch (subset) {
    case Subset::train: return "train";
    case Subset::validation: return "validation";
    case Subset::unassigned: break;
  }
  return "unassigned";
}

Subset subset_from_string(const std::string& name) {
  if (name == "train") return Subset::train;
  if (name == "validation") return Subset::validation;
  if (name == "unassigned") return Subset::unassigned;
  throw std::invalid_argument("unknown subset '" + name + "'");
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  json entries = json::array();
  for (const auto& e : manifest.recordings) {
    entries.push_back({{"file", e.file},
                       {"class", e.label},
                       {"subject", e.subject},
                       {"repetition", e.repetition},
                       {"subset", to_string(e.subset)},
                       {"sentence_type", e.sentence_type}});
  }
  const json doc = {{"sample_rate", manifest.sample_rate},
                    {"class_count", manifest.class_count},
                    {"seed", manifest.seed},
                    {"recordings", entries}};
  auto out = text::open_for_write(path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  auto in = text::open_for_read(path);
  try {
    const json doc = json::parse(in);
    Manifest m;
    m.sample_rate = doc.value("sample_rate", 100.0);
    m.class_count = doc.value("class_count", std::size_t{0});
    m.seed = doc.value("seed", std::uint64_t{0});
    if (!(m.sample_rate > 0.0)) throw std::runtime_error("sample_rate must be positive");
    for (const auto& e : doc.at("recordings")) {
      ManifestEntry entry;
      entry.file = e.at("file").get<std::string>();
      entry.label = e.at("class").get<std::size_t>();
      entry.subject = e.value("subject", std::size_t{0});
      entry.repetition = e.value("repetition", std::size_t{0});
      entry.subset = subset_from_string(e.value("subset", std::string("unassigned")));
      entry.sentence_type = e.value("sentence_type", std::string());
      if (m.class_count && entry.label >= m.class_count) {
        throw std::runtime_error("recording " + entry.file + " has class outside class_count");
      }
      m.recordings.push_back(std::move(entry));
    }
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": malformed manifest: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_calibration(const CalibrationParams& params, const std::filesystem::path& path) {
  const json doc = {{"accel", {{"bias", params.accel_bias}, {"matrix", params.accel_matrix}}},
                    {"gyro", {{"bias", params.gyro_bias}, {"scale", params.gyro_scale}}}};
  auto out = text::open_for_write(path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

CalibrationParams read_calibration(const std::filesystem::path& path) {
  auto in = text::open_for_read(path);
  CalibrationParams params;
  try {
    const json doc = json::parse(in);
    params.accel_bias = doc.at("accel").at("bias").get<std::array<double, 3>>();
    params.accel_matrix = doc.at("accel").at("matrix").get<std::array<double, 9>>();
    params.gyro_bias = doc.at("gyro").at("bias").get<std::array<double, 3>>();
    params.gyro_scale = doc.at("gyro").at("scale").get<std::array<double, 3>>();
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": malformed calibration: " + e.what());
  }
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return params;
}

}  // namespace imucaps
