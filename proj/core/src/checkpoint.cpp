#include "imucaps/checkpoint.hpp"

#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "binary_io.hpp"

namespace imucaps {

using nlohmann::json;

namespace {

constexpr char kMagic[9] = "IMUCKPT1";

template <typename T>
void read_field(const json& obj, const char* key, T& field) {
  if (obj.contains(key)) field = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown model config field '" + key + "'");
  }
}

json config_json(const ModelConfig& config) {
  if (const auto* caps = std::get_if<CapsNetConfig>(&config)) {
    return {{"kind", "capsnet"},
            {"input_channels", caps->input_channels},
            {"input_length", caps->input_length},
            {"conv1_filters", caps->conv1_filters},
            {"kernel_length", caps->kernel_length},
            {"conv1_stride", caps->conv1_stride},
            {"primary_channels", caps->primary_channels},
            {"capsule_dim", caps->capsule_dim},
            {"primary_stride", caps->primary_stride},
            {"class_count", caps->class_count},
            {"digit_dim_per_class", caps->digit_dim_per_class},
            {"routing_iterations", caps->routing_iterations},
            {"fc_units", caps->fc_units},
            {"output_activation", to_string(caps->output_activation)}};
  }
  const auto& cnn = std::get<CnnConfig>(config);
  return {{"kind", "cnn"},
          {"input_channels", cnn.input_channels},
          {"input_length", cnn.input_length},
          {"conv1_filters", cnn.conv1_filters},
          {"conv2_filters", cnn.conv2_filters},
          {"kernel_length", cnn.kernel_length},
          {"pool_size", cnn.pool_size},
          {"hidden_units", cnn.hidden_units},
          {"class_count", cnn.class_count},
          {"output_activation", to_string(cnn.output_activation)}};
}

ModelConfig config_from(const json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("model config must be a JSON object");
  const std::string kind = obj.value("kind", "");
  std::string activation;
  if (kind == "capsnet") {
    reject_unknown(obj, {"kind", "input_channels", "input_length", "conv1_filters", "kernel_length", "conv1_stride",
                         "primary_channels", "capsule_dim", "primary_stride", "class_count", "digit_dim_per_class",
                         "routing_iterations", "fc_units", "output_activation"});
    CapsNetConfig c;
    read_field(obj, "input_channels", c.input_channels);
    read_field(obj, "input_length", c.input_length);
    read_field(obj, "conv1_filters", c.conv1_filters);
    read_field(obj, "kernel_length", c.kernel_length);
    read_field(obj, "conv1_stride", c.conv1_stride);
    read_field(obj, "primary_channels", c.primary_channels);
    read_field(obj, "capsule_dim", c.capsule_dim);
    read_field(obj, "primary_stride", c.primary_stride);
    read_field(obj, "class_count", c.class_count);
    read_field(obj, "digit_dim_per_class", c.digit_dim_per_class);
    read_field(obj, "routing_iterations", c.routing_iterations);
    read_field(obj, "fc_units", c.fc_units);
    read_field(obj, "output_activation", activation);
    if (!activation.empty()) c.output_activation = output_activation_from_string(activation);
    c.validate();
    return c;
  }
  if (kind == "cnn") {
    reject_unknown(obj, {"kind", "input_channels", "input_length", "conv1_filters", "conv2_filters", "kernel_length",
                         "pool_size", "hidden_units", "class_count", "output_activation"});
    CnnConfig c;
    read_field(obj, "input_channels", c.input_channels);
    read_field(obj, "input_length", c.input_length);
    read_field(obj, "conv1_filters", c.conv1_filters);
    read_field(obj, "conv2_filters", c.conv2_filters);
    read_field(obj, "kernel_length", c.kernel_length);
    read_field(obj, "pool_size", c.pool_size);
    read_field(obj, "hidden_units", c.hidden_units);
    read_field(obj, "class_count", c.class_count);
    read_field(obj, "output_activation", activation);
    if (!activation.empty()) c.output_activation = output_activation_from_string(activation);
    c.validate();
    return c;
  }
  throw std::invalid_argument("model config kind must be \"capsnet\" or \"cnn\", got \"" + kind + "\"");
}

void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  binary::write_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  binary::write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) binary::write_u64(out, d);
  for (double v : t.values()) binary::write_f64(out, v);
}

constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

std::pair<std::string, Tensor> read_tensor(std::istream& in) {
  const std::uint32_t name_length = binary::read_u32(in);
  if (name_length > 4096) throw binary::FormatError("tensor name too long");
  std::string name(name_length, '\0');
  if (!in.read(name.data(), name_length)) throw binary::FormatError("unexpected end of file");
  const std::uint32_t rank = binary::read_u32(in);
  if (rank == 0 || rank > 8) throw binary::FormatError("tensor '" + name + "' has invalid rank");
  Shape shape(rank);
  std::uint64_t numel = 1;
  for (auto& d : shape) {
    d = binary::read_u64(in);
    if (d == 0 || d > kMaxElements || numel * d > kMaxElements) {
      throw binary::FormatError("tensor '" + name + "' has invalid extents");
    }
    numel *= d;
  }
  std::vector<double> values(numel);
  for (auto& v : values) v = binary::read_f64(in);
  return {std::move(name), Tensor(std::move(shape), std::move(values))};
}

std::vector<double> as_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

std::string model_config_to_json(const ModelConfig& config) { return config_json(config).dump(2); }

ModelConfig model_config_from_json(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed model config: ") + e.what());
  }
  try {
    return config_from(obj);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed model config: ") + e.what());
  }
}

Classifier ModelCheckpoint::classifier() const { return Classifier(config, params, normalization); }

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  ckpt.optimizer.validate();
  const json header = {{"format", 1},
                       {"config", config_json(ckpt.config)},
                       {"seed", ckpt.seed},
                       {"epoch", ckpt.epoch},
                       {"batch_size", ckpt.batch_size},
                       {"optimizer",
                        {{"step_count", ckpt.optimizer.step_count},
                         {"learning_rate", ckpt.optimizer.learning_rate},
                         {"beta1", ckpt.optimizer.beta1},
                         {"beta2", ckpt.optimizer.beta2},
                         {"epsilon", ckpt.optimizer.epsilon}}}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  binary::write_magic(out, kMagic);
  binary::write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  const std::size_t moments = ckpt.optimizer.first_moment.size() + ckpt.optimizer.second_moment.size() +
                              ckpt.optimizer.second_moment_max.size();
  binary::write_u64(out, ckpt.params.size() + moments + 2);
  for (const auto& [name, t] : ckpt.params) write_tensor(out, "param/" + name, t);
  for (const auto& [name, t] : ckpt.optimizer.first_moment) write_tensor(out, "adam.m/" + name, t);
  for (const auto& [name, t] : ckpt.optimizer.second_moment) write_tensor(out, "adam.v/" + name, t);
  for (const auto& [name, t] : ckpt.optimizer.second_moment_max) write_tensor(out, "adam.vmax/" + name, t);
  write_tensor(out, "input.mean", Tensor({ckpt.normalization.mean.size()}, ckpt.normalization.mean));
  write_tensor(out, "input.scale", Tensor({ckpt.normalization.scale.size()}, ckpt.normalization.scale));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string where = path.string() + ": ";
  try {
    binary::expect_magic(in, kMagic, "checkpoint");
    const std::uint64_t header_size = binary::read_u64(in);
    if (header_size > (1u << 24)) throw binary::FormatError("header too large");
    std::string text(header_size, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(header_size))) {
      throw binary::FormatError("unexpected end of file");
    }
    const json header = json::parse(text);

    ModelCheckpoint ckpt;
    ckpt.config = config_from(header.at("config"));
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.epoch = header.at("epoch").get<std::size_t>();
    ckpt.batch_size = header.at("batch_size").get<std::size_t>();
    const json& opt = header.at("optimizer");
    ckpt.optimizer.step_count = opt.at("step_count").get<std::uint64_t>();
    ckpt.optimizer.learning_rate = opt.at("learning_rate").get<double>();
    ckpt.optimizer.beta1 = opt.at("beta1").get<double>();
    ckpt.optimizer.beta2 = opt.at("beta2").get<double>();
    ckpt.optimizer.epsilon = opt.at("epsilon").get<double>();

    const std::uint64_t count = binary::read_u64(in);
    if (count > 100000) throw binary::FormatError("implausible tensor count");
    bool have_mean = false;
    bool have_scale = false;
    for (std::uint64_t i = 0; i < count; ++i) {
      auto [name, tensor] = read_tensor(in);
      const auto slash = name.find('/');
      const std::string prefix = slash == std::string::npos ? name : name.substr(0, slash);
      const std::string rest = slash == std::string::npos ? std::string() : name.substr(slash + 1);
      if (prefix == "param") {
        ckpt.params.add(rest, std::move(tensor));
      } else if (prefix == "adam.m") {
        ckpt.optimizer.first_moment.add(rest, std::move(tensor));
      } else if (prefix == "adam.v") {
        ckpt.optimizer.second_moment.add(rest, std::move(tensor));
      } else if (prefix == "adam.vmax") {
        ckpt.optimizer.second_moment_max.add(rest, std::move(tensor));
      } else if (name == "input.mean") {
        ckpt.normalization.mean = as_vector(tensor);
        have_mean = true;
      } else if (name == "input.scale") {
        ckpt.normalization.scale = as_vector(tensor);
        have_scale = true;
      } else {
        throw binary::FormatError("unknown tensor '" + name + "'");
      }
    }
    if (!have_mean || !have_scale) throw binary::FormatError("missing input normalization");
    if (in.peek() != std::char_traits<char>::eof()) throw binary::FormatError("trailing bytes");
    ckpt.optimizer.validate();
    // Shape-checks params against the architecture.
    (void)ckpt.classifier();
    return ckpt;
  } catch (const json::exception& e) {
    throw binary::FormatError(where + "bad checkpoint header: " + e.what());
  } catch (const binary::FormatError& e) {
    throw binary::FormatError(where + e.what());
  } catch (const ShapeError& e) {
    throw binary::FormatError(where + e.what());
  }
}

}  // namespace imucaps
