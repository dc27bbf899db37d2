#include "imucaps/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

#include "imucaps/rng.hpp"

namespace imucaps {

namespace {

constexpr std::uint64_t kInventorySeed = 0x5349474E;
constexpr std::uint64_t kSentenceSeed = 0x53454E54;
constexpr std::size_t kInventorySize = 24;
constexpr std::size_t kAssertiveClasses = 12;

}  // namespace

double SignPrimitive::value(std::size_t channel, double u) const {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double envelope = std::pow(std::sin(std::numbers::pi * u), 2);
  double sum = 0.0;
  for (const auto& c : channels.at(channel)) sum += c.amplitude * std::sin(2.0 * std::numbers::pi * c.cycles * u + c.phase);
  return envelope * sum;
}

GeneratorConfig GeneratorConfig::desk() {
  GeneratorConfig config;
  config.subjects = 2;
  config.repetitions = 5;
  return config;
}

GeneratorConfig GeneratorConfig::full() { return GeneratorConfig{}; }

void GeneratorConfig::validate() const {
  if (class_count == 0 || subjects == 0 || repetitions == 0) {
    throw std::invalid_argument("class, subject, and repetition counts must be positive");
  }
  if (!(accel_noise >= 0.0) || !(gyro_noise >= 0.0)) throw std::invalid_argument("noise std must be non-negative");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
  if (!(gap_seconds >= 0.0)) throw std::invalid_argument("gap must be non-negative");
  if (!(tempo_jitter >= 0.0 && tempo_jitter < 0.5)) throw std::invalid_argument("tempo jitter must lie in [0, 0.5)");
  if (!(amplitude_jitter >= 0.0 && amplitude_jitter < 0.5)) {
    throw std::invalid_argument("amplitude jitter must lie in [0, 0.5)");
  }
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw std::invalid_argument("train fraction outside [0, 1]");
}

const std::vector<SignPrimitive>& primitive_inventory() {
  static const std::vector<SignPrimitive> inventory = [] {
    Engine engine(kInventorySeed);
    std::vector<SignPrimitive> out(kInventorySize);
    for (std::size_t id = 0; id < kInventorySize; ++id) {
      SignPrimitive& p = out[id];
      p.id = id;
      p.duration = uniform(engine, 0.5, 0.8);
      for (std::size_t ch = 0; ch < 6; ++ch) {
        const bool gyro = ch >= 3;
        const auto components = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 3)(engine));
        for (std::size_t k = 0; k < components; ++k) {
          SineComponent c;
          c.amplitude = gyro ? uniform(engine, 10.0, 80.0) : uniform(engine, 0.5, 2.5);
          c.cycles = uniform(engine, 0.5, 1.5);
          c.phase = uniform(engine, 0.0, 2.0 * std::numbers::pi);
          p.channels[ch].push_back(c);
        }
      }
    }
    return out;
  }();
  return inventory;
}

std::vector<SentenceSpec> sentence_specs(std::size_t class_count) {
  Engine engine(kSentenceSeed);
  std::uniform_int_distribution<std::size_t> pick(0, kInventorySize - 1);
  std::set<std::vector<std::size_t>> seen;
  std::vector<SentenceSpec> specs;
  specs.reserve(class_count);
  for (std::size_t c = 0; c < class_count; ++c) {
    SentenceSpec spec;
    spec.class_id = c;
    spec.sentence_type = c < kAssertiveClasses ? "assertive" : "interrogative";
    const std::size_t length = 2 + c % 3;
    do {
      spec.primitives.clear();
      while (spec.primitives.size() < length) {
        const std::size_t id = pick(engine);
        if (spec.primitives.empty() || spec.primitives.back() != id) spec.primitives.push_back(id);
      }
    } while (!seen.insert(spec.primitives).second);
    specs.push_back(std::move(spec));
  }
  return specs;
}

ImuRecording generate_sentence(const SentenceSpec& spec, std::size_t subject, std::size_t repetition,
                               const GeneratorConfig& config, const std::vector<SignPrimitive>& inventory) {
  config.validate();
  if (spec.primitives.size() < 2 || spec.primitives.size() > 4) {
    throw std::invalid_argument("a sentence holds 2 to 4 signs");
  }
  for (std::size_t id : spec.primitives) {
    if (id >= inventory.size()) throw std::out_of_range("sign id " + std::to_string(id) + " not in inventory");
  }

  Engine subject_engine(derive_seed(config.seed, {0x5355424A, subject}));
  const double subject_tempo = uniform(subject_engine, 1.0 - config.tempo_jitter, 1.0 + config.tempo_jitter);
  const double subject_gain = uniform(subject_engine, 1.0 - config.amplitude_jitter, 1.0 + config.amplitude_jitter);
  Engine engine(derive_seed(config.seed, {spec.class_id, subject, repetition}));
  const double tempo = subject_tempo * uniform(engine, 1.0 - config.tempo_jitter, 1.0 + config.tempo_jitter);

  std::vector<double> onsets;
  std::vector<double> spans;
  double clock = 0.0;
  for (std::size_t k = 0; k < spec.primitives.size(); ++k) {
    if (k) clock += config.gap_seconds * tempo;
    onsets.push_back(clock);
    spans.push_back(inventory[spec.primitives[k]].duration * tempo);
    clock += spans.back();
  }
  const auto samples = static_cast<std::size_t>(std::llround(clock * config.sample_rate));

  ImuRecording rec;
  rec.sample_rate = config.sample_rate;
  rec.label = spec.class_id;
  rec.subject = subject;
  rec.repetition = repetition;
  rec.accel = Tensor({3, samples});
  rec.gyro = Tensor({3, samples});
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t t = 0; t < samples; ++t) {
    const double time = static_cast<double>(t) / config.sample_rate;
    for (std::size_t ch = 0; ch < 6; ++ch) {
      double value = 0.0;
      for (std::size_t k = 0; k < spec.primitives.size(); ++k) {
        const double u = (time - onsets[k]) / spans[k];
        if (u > 0.0 && u < 1.0) value += subject_gain * inventory[spec.primitives[k]].value(ch, u);
      }
      if (ch < 3) {
        if (ch == 2) value += kGravity;
        value = std::clamp(value + config.accel_noise * noise(engine), -kAccelBound, kAccelBound);
        rec.accel.at(ch, t) = value;
      } else {
        value = std::clamp(value + config.gyro_noise * noise(engine), -kGyroBound, kGyroBound);
        rec.gyro.at(ch - 3, t) = value;
      }
    }
  }
  return rec;
}

GeneratedDataset generate_dataset(const GeneratorConfig& config) {
  config.validate();
  const auto specs = sentence_specs(config.class_count);
  GeneratedDataset out;
  out.manifest.sample_rate = config.sample_rate;
  out.manifest.class_count = config.class_count;
  out.manifest.seed = config.seed;
  std::vector<std::size_t> labels;
  for (const auto& spec : specs) {
    for (std::size_t s = 0; s < config.subjects; ++s) {
      for (std::size_t r = 0; r < config.repetitions; ++r) {
        char name[64];
        std::snprintf(name, sizeof name, "c%02zu_s%02zu_r%02zu.csv", spec.class_id, s, r);
        out.manifest.recordings.push_back({name, spec.class_id, s, r, Subset::unassigned, spec.sentence_type});
        out.recordings.push_back(generate_sentence(spec, s, r, config));
        labels.push_back(spec.class_id);
      }
    }
  }
  const auto subsets = stratified_split(labels, config.train_fraction, config.seed);
  for (std::size_t i = 0; i < subsets.size(); ++i) out.manifest.recordings[i].subset = subsets[i];
  return out;
}

void write_generated_dataset(const GeneratedDataset& dataset, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (std::size_t i = 0; i < dataset.recordings.size(); ++i) {
    write_recording_csv(dataset.recordings[i], directory / dataset.manifest.recordings[i].file);
  }
  write_manifest(dataset.manifest, directory / "manifest.json");
}

double nearest_centroid_accuracy(const std::vector<const FeatureWindow*>& train,
                                 const std::vector<const FeatureWindow*>& test) {
  if (train.empty() || test.empty()) throw std::invalid_argument("nearest centroid needs train and test windows");
  std::map<std::size_t, std::pair<Tensor, std::size_t>> centroids;
  for (const auto* w : train) {
    auto [it, inserted] = centroids.try_emplace(w->label, Tensor(w->data.shape()), 0);
    it->second.first += w->data;
    it->second.second += 1;
  }
  for (auto& [label, entry] : centroids) entry.first *= 1.0 / static_cast<double>(entry.second);

  std::size_t correct = 0;
  for (const auto* w : test) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_label = 0;
    for (const auto& [label, entry] : centroids) {
      const Tensor& c = entry.first;
      require_same_shape(c, w->data, "nearest centroid window");
      double d = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) d += (c[i] - w->data[i]) * (c[i] - w->data[i]);
      if (d < best) {
        best = d;
        best_label = label;
      }
    }
    correct += best_label == w->label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace imucaps
