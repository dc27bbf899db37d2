#include <benchmark/benchmark.h>

#include <random>

#include "imucaps/capsule.hpp"
#include "imucaps/layers.hpp"

namespace {

using namespace imucaps;

Tensor filled(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor t(shape);
  for (auto& v : t.values()) v = dist(engine);
  return t;
}

void BM_Conv1dForward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const auto filters = static_cast<std::size_t>(state.range(1));
  const Tensor input = filled({channels, 700}, 1);
  const Tensor weight = filled({filters, channels, 12}, 2);
  const Tensor bias = filled({filters}, 3);
  Conv1dCache cache;
  for (auto _ : state) benchmark::DoNotOptimize(conv1d_forward(input, weight, bias, 1, cache));
}
BENCHMARK(BM_Conv1dForward)->Args({9, 256})->Args({256, 100})->Unit(benchmark::kMillisecond);

void BM_Conv1dBackward(benchmark::State& state) {
  const Tensor input = filled({9, 700}, 1);
  const Tensor weight = filled({256, 9, 12}, 2);
  const Tensor bias = filled({256}, 3);
  Conv1dCache cache;
  const Tensor out = conv1d_forward(input, weight, bias, 1, cache);
  const Tensor upstream = filled(out.shape(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(conv1d_backward(upstream, cache));
}
BENCHMARK(BM_Conv1dBackward)->Unit(benchmark::kMillisecond);

void BM_DynamicRouting(benchmark::State& state) {
  const auto lower = static_cast<std::size_t>(state.range(0));
  const auto iterations = static_cast<std::size_t>(state.range(1));
  const Tensor u_hat = filled({lower, 20, 10}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(dynamic_routing(u_hat, iterations));
}
BENCHMARK(BM_DynamicRouting)->Args({6700, 3})->Args({6700, 5})->Unit(benchmark::kMillisecond);

void BM_DynamicRoutingBackward(benchmark::State& state) {
  const Tensor u_hat = filled({6700, 20, 10}, 5);
  const RoutingState routed = dynamic_routing(u_hat, 3);
  const Tensor upstream = filled({20, 10}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(dynamic_routing_backward(upstream, u_hat, routed));
}
BENCHMARK(BM_DynamicRoutingBackward)->Unit(benchmark::kMillisecond);

}  // namespace
