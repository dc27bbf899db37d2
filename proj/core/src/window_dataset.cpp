#include "imucaps/window_dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "binary_io.hpp"
#include "imucaps/rng.hpp"

namespace imucaps {

namespace {
constexpr char kMagic[9] = "IMUWIN01";
}

void WindowDataset::add(FeatureWindow window, Subset subset) {
  windows.push_back(std::move(window));
  subsets.push_back(subset);
}

std::vector<std::size_t> WindowDataset::indices(Subset subset) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    if (subsets[i] == subset) out.push_back(i);
  }
  return out;
}

bool WindowDataset::has_assignment() const noexcept {
  return std::any_of(subsets.begin(), subsets.end(), [](Subset s) { return s != Subset::unassigned; });
}

void WindowDataset::validate(std::size_t class_count) const {
  if (subsets.size() != windows.size()) throw std::invalid_argument("subset list does not match window count");
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].data.shape() != Shape{channels, length}) {
      throw ShapeError("window " + std::to_string(i) + " has shape " + shape_to_string(windows[i].data.shape()) +
                       ", expected " + shape_to_string({channels, length}));
    }
    if (class_count && windows[i].label >= class_count) {
      throw std::out_of_range("window " + std::to_string(i) + " label " + std::to_string(windows[i].label) +
                              " outside [0, " + std::to_string(class_count) + ")");
    }
  }
}

std::vector<Subset> stratified_split(const std::vector<std::size_t>& labels, double train_fraction,
                                     std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw std::invalid_argument("train fraction outside [0, 1]");
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::vector<Subset> subsets(labels.size(), Subset::validation);
  for (auto& [label, members] : by_class) {
    Engine engine(derive_seed(seed, {0x53504C4954, label}));
    std::shuffle(members.begin(), members.end(), engine);
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * members.size() + 0.5));
    for (std::size_t k = 0; k < n_train; ++k) subsets[members[k]] = Subset::train;
  }
  return subsets;
}

void save_window_dataset(const WindowDataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  binary::write_magic(out, kMagic);
  binary::write_u64(out, dataset.size());
  binary::write_u64(out, dataset.channels);
  binary::write_u64(out, dataset.length);
  for (const auto& w : dataset.windows) {
    for (double v : w.data.values()) binary::write_f64(out, v);
  }
  for (const auto& w : dataset.windows) binary::write_u32(out, static_cast<std::uint32_t>(w.label));
  for (Subset s : dataset.subsets) out.put(static_cast<char>(s));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

WindowDataset load_window_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open window dataset " + path.string());
  binary::expect_magic(in, kMagic, "window dataset");
  WindowDataset dataset;
  const std::uint64_t count = binary::read_u64(in);
  dataset.channels = binary::read_u64(in);
  dataset.length = binary::read_u64(in);
  if (dataset.channels == 0 || dataset.length == 0) throw binary::FormatError("window dataset has empty windows");
  const auto file_size = std::filesystem::file_size(path);
  const std::uint64_t expected = 32 + count * (dataset.channels * dataset.length * 8 + 4 + 1);
  if (file_size != expected) throw binary::FormatError("window dataset size does not match its header");

  dataset.windows.resize(count);
  for (auto& w : dataset.windows) {
    w.data = Tensor({dataset.channels, dataset.length});
    for (double& v : w.data.values()) v = binary::read_f64(in);
  }
  for (auto& w : dataset.windows) w.label = binary::read_u32(in);
  dataset.subsets.resize(count);
  for (auto& s : dataset.subsets) {
    const int byte = in.get();
    if (byte < 0 || byte > 2) throw binary::FormatError("invalid subset code in window dataset");
    s = static_cast<Subset>(byte);
  }
  return dataset;
}

}  // namespace imucaps
