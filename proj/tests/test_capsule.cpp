#include <gtest/gtest.h>

#include <cmath>

#include "imucaps/capsule.hpp"
#include "imucaps/gradcheck.hpp"
#include "support.hpp"

using namespace imucaps;
using imucaps::testing::random_tensor;

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Squash, ZeroVectorMapsToZero) { EXPECT_EQ(squash(Tensor({4})), Tensor({4})); }

TEST(Squash, ThreeFourExample) {
  const Tensor v = squash(Tensor::from({3.0, 4.0}));
  EXPECT_NEAR(v[0], 3.0 * 5.0 / 26.0, 1e-15);
  EXPECT_NEAR(v[1], 4.0 * 5.0 / 26.0, 1e-15);
  EXPECT_NEAR(v[0], 0.57692, 1e-5);
  EXPECT_NEAR(v[1], 0.76923, 1e-5);
}

TEST(Squash, NormBelowOneAndDirectionPreserved) {
  std::mt19937_64 engine(5);
  std::uniform_real_distribution<double> scale(-6.0, 3.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Tensor s = random_tensor({5}, 1000 + trial);
    s *= std::pow(10.0, scale(engine));
    const Tensor v = squash(s);
    EXPECT_LT(norm(v.values()), 1.0);
    EXPECT_NEAR(dot(s.values(), v.values()) / (norm(s.values()) * norm(v.values())), 1.0, 1e-12);
  }
}

TEST(Squash, BackwardMatchesFiniteDifferencesIncludingZeroRow) {
  Tensor s = random_tensor({4, 3}, 17, -2.0, 2.0);
  for (std::size_t d = 0; d < 3; ++d) s.at(2, d) = 0.0;
  const Tensor upstream = random_tensor({4, 3}, 18);
  const Tensor grad = squash_backward(upstream, s);
  for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(grad.at(2, d), 0.0);

  s.at(2, 0) = 0.7;  // keep the numeric check away from the kink at zero
  ParamSet params;
  params.add("s", s);
  const auto loss = [&](const ParamSet& p) { return dot(squash_rows(p.get("s")).values(), upstream.values()); };
  ParamSet analytic;
  analytic.add("s", squash_backward(upstream, s));
  EXPECT_TRUE(finite_difference_check(loss, params, analytic).passed);
}

TEST(Routing, RejectsZeroIterations) { EXPECT_THROW(dynamic_routing(Tensor({2, 2, 2}), 0), std::invalid_argument); }

TEST(Routing, FirstIterationCouplingsAreUniform) {
  const RoutingState state = dynamic_routing(random_tensor({6, 4, 3}, 3), 1);
  for (double c : state.couplings.values()) EXPECT_DOUBLE_EQ(c, 0.25);
}

TEST(Routing, SingleCapsuleSingleClassIsSquash) {
  const Tensor u = Tensor::from({{{0.3, -1.2, 2.0}}});
  for (std::size_t iterations : {1u, 3u, 5u}) {
    const RoutingState state = dynamic_routing(u, iterations);
    EXPECT_LE(max_abs_diff(state.outputs, squash(Tensor::from({0.3, -1.2, 2.0})).reshaped({1, 3})), 1e-15);
  }
}

TEST(Routing, MatchesIndependentTraceOfThreeIterations) {
  // Reference computed by a separate straight-line implementation of the update rule.
  const Tensor u = Tensor::from({{{0.5, -1.0}, {1.5, 0.25}}, {{-0.75, 2.0}, {0.3, -0.6}}});
  const RoutingState state = dynamic_routing(u, 3);
  const Tensor expected_v = Tensor::from({{-0.23289197170685513, 0.6361531760532623},
                                          {0.6731655259116878, 0.02958891671170237}});
  const Tensor expected_c = Tensor::from({{0.09695861369278282, 0.9030413863072172},
                                          {0.7289230467803187, 0.27107695321968134}});
  EXPECT_LE(max_abs_diff(state.outputs, expected_v), 1e-12);
  EXPECT_LE(max_abs_diff(state.couplings, expected_c), 1e-12);
}

TEST(Routing, CouplingRowsSumToOneAtEveryIteration) {
  const RoutingState state = dynamic_routing(random_tensor({64, 20, 4}, 8, -2.0, 2.0), 5);
  ASSERT_EQ(state.coupling_history.size(), 5u);
  for (const Tensor& c : state.coupling_history) {
    for (std::size_t i = 0; i < 64; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 20; ++j) sum += c.at(i, j);
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
  for (std::size_t j = 0; j < 20; ++j) EXPECT_LT(norm(state.outputs.row(j)), 1.0);
}

TEST(Routing, OneIterationIsSquashOfMean) {
  const Tensor u = random_tensor({9, 3, 4}, 21);
  const RoutingState state = dynamic_routing(u, 1);
  for (std::size_t j = 0; j < 3; ++j) {
    Tensor mean({4});
    for (std::size_t i = 0; i < 9; ++i) {
      for (std::size_t d = 0; d < 4; ++d) mean[d] += u.at(i, j, d) / 3.0;
    }
    const Tensor expected = squash(mean);
    for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR(state.outputs.at(j, d), expected[d], 1e-12);
  }
}

class RoutingGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(RoutingGradient, BackwardMatchesFiniteDifferences) {
  const std::size_t iterations = GetParam();
  const Tensor upstream = random_tensor({3, 2}, 41);
  ParamSet params;
  params.add("u", random_tensor({5, 3, 2}, 42, -1.5, 1.5));
  const auto loss = [&](const ParamSet& p) {
    return dot(dynamic_routing(p.get("u"), iterations).outputs.values(), upstream.values());
  };
  const RoutingState state = dynamic_routing(params.get("u"), iterations);
  ParamSet analytic;
  analytic.add("u", dynamic_routing_backward(upstream, params.get("u"), state));
  const GradCheckReport report = finite_difference_check(loss, params, analytic);
  EXPECT_TRUE(report.passed) << report.max_relative_error;
}

INSTANTIATE_TEST_SUITE_P(Iterations, RoutingGradient, ::testing::Values(1u, 2u, 3u, 5u));

TEST(Routing, IsDeterministic) {
  const Tensor u = random_tensor({12, 5, 3}, 77);
  EXPECT_EQ(dynamic_routing(u, 3).outputs, dynamic_routing(u, 3).outputs);
}
