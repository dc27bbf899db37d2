#include <benchmark/benchmark.h>

#include <random>

#include "imucaps/models.hpp"

namespace {

using namespace imucaps;

Tensor window(std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor t({9, 700});
  for (auto& v : t.values()) v = dist(engine);
  return t;
}

void BM_ForwardPass(benchmark::State& state) {
  const auto preset = static_cast<Preset>(state.range(0));
  const Classifier model(preset_config(preset, 700, 20), 1);
  const Tensor input = window(2);
  for (auto _ : state) benchmark::DoNotOptimize(model.scores(input));
  state.SetLabel(to_string(preset));
}
BENCHMARK(BM_ForwardPass)
    ->Arg(static_cast<int>(Preset::capsnet3))
    ->Arg(static_cast<int>(Preset::capsnet5))
    ->Arg(static_cast<int>(Preset::cnn))
    ->Unit(benchmark::kMillisecond);

void BM_TrainingSample(benchmark::State& state) {
  const auto preset = static_cast<Preset>(state.range(0));
  const Classifier model(preset_config(preset, 700, 20), 1);
  const Tensor input = window(3);
  ParamSet grads = model.params().zeros_like();
  for (auto _ : state) benchmark::DoNotOptimize(model.accumulate_gradients(input, 4, grads));
  state.SetLabel(to_string(preset));
}
BENCHMARK(BM_TrainingSample)
    ->Arg(static_cast<int>(Preset::capsnet3))
    ->Arg(static_cast<int>(Preset::cnn))
    ->Unit(benchmark::kMillisecond);

}  // namespace
