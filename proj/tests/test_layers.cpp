#include <gtest/gtest.h>

#include <cmath>

#include "imucaps/gradcheck.hpp"
#include "imucaps/layers.hpp"
#include "support.hpp"

using namespace imucaps;
using imucaps::testing::random_tensor;

TEST(Conv1d, HandSummedExample) {
  const Tensor out = conv1d_forward(Tensor::from({{1.0, 2.0, 3.0, 4.0}}), Tensor::from({{{1.0, 0.0, -1.0}}}),
                                    Tensor::from({0.0}), 1);
  EXPECT_EQ(out, Tensor::from({{-2.0, -2.0}}));
}

TEST(Conv1d, IdentityKernelCopiesInput) {
  const Tensor input = random_tensor({1, 9}, 3);
  EXPECT_EQ(conv1d_forward(input, Tensor({1, 1, 1}, {1.0}), Tensor::from({0.0}), 1), input);
}

TEST(Conv1d, OutputLengthFormula) {
  EXPECT_EQ(conv1d_output_length(2000, 12, 1), 1989u);
  EXPECT_EQ(conv1d_output_length(1989, 12, 2), 989u);
  EXPECT_EQ(conv1d_output_length(10, 3, 3), 3u);
  EXPECT_THROW(conv1d_output_length(4, 5, 1), ShapeError);
}

TEST(Conv1d, StrideAndBias) {
  const Tensor out = conv1d_forward(Tensor::from({{1.0, 2.0, 3.0, 4.0, 5.0}}), Tensor::from({{{1.0, 1.0}}}),
                                    Tensor::from({0.5}), 2);
  EXPECT_EQ(out, Tensor::from({{3.5, 7.5}}));
}

TEST(Conv1d, RejectsChannelMismatch) {
  EXPECT_THROW(conv1d_forward(Tensor({2, 6}), Tensor({1, 3, 2}), Tensor({1}), 1), ShapeError);
  EXPECT_THROW(conv1d_forward(Tensor({2, 6}), Tensor({1, 2, 2}), Tensor({2}), 1), ShapeError);
}

TEST(Conv1d, BackwardWithoutCacheIsAnError) {
  EXPECT_THROW(conv1d_backward(Tensor({1, 2}), Conv1dCache{}), std::logic_error);
}

TEST(Conv1d, ZeroUpstreamGivesZeroGradients) {
  Conv1dCache cache;
  const Tensor out = conv1d_forward(random_tensor({2, 7}, 1), random_tensor({3, 2, 3}, 2), Tensor({3}), 1, cache);
  const Conv1dGrads g = conv1d_backward(Tensor::zeros_like(out), cache);
  for (const Tensor* t : {&g.input, &g.kernels, &g.bias}) {
    for (double v : t->values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Conv1d, ScalarKernelGradientIsUpstreamTimesInput) {
  Conv1dCache cache;
  (void)conv1d_forward(Tensor({1, 1}, {3.0}), Tensor({1, 1, 1}, {2.0}), Tensor::from({0.0}), 1, cache);
  const Conv1dGrads g = conv1d_backward(Tensor({1, 1}, {5.0}), cache);
  EXPECT_EQ(g.kernels[0], 15.0);
  EXPECT_EQ(g.input[0], 10.0);
  EXPECT_EQ(g.bias[0], 5.0);
}

class Conv1dGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(Conv1dGradient, MatchesFiniteDifferences) {
  const std::size_t stride = GetParam();
  const Tensor upstream_weights = random_tensor({3, conv1d_output_length(7, 3, stride)}, 11);
  ParamSet params;
  params.add("input", random_tensor({2, 7}, 12));
  params.add("kernels", random_tensor({3, 2, 3}, 13));
  params.add("bias", random_tensor({3}, 14));
  // Linear read-out of the output makes upstream_weights the upstream gradient.
  const auto loss = [&](const ParamSet& p) {
    const Tensor out = conv1d_forward(p.get("input"), p.get("kernels"), p.get("bias"), stride);
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) sum += out[i] * upstream_weights[i];
    return sum;
  };
  Conv1dCache cache;
  (void)conv1d_forward(params.get("input"), params.get("kernels"), params.get("bias"), stride, cache);
  const Conv1dGrads g = conv1d_backward(upstream_weights, cache);
  ParamSet analytic;
  analytic.add("input", g.input);
  analytic.add("kernels", g.kernels);
  analytic.add("bias", g.bias);
  const GradCheckReport report = finite_difference_check(loss, params, analytic);
  EXPECT_TRUE(report.passed) << report.max_relative_error;
  EXPECT_LE(report.max_relative_error, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Strides, Conv1dGradient, ::testing::Values(1u, 2u, 3u));

TEST(Dense, ForwardExamples) {
  EXPECT_EQ(dense_forward(Tensor::from({1.0, 1.0}), Tensor::from({{2.0, 3.0}}), Tensor::from({-5.0})),
            Tensor::from({0.0}));
  const Tensor x = Tensor::from({0.25, -4.0});
  EXPECT_EQ(dense_forward(x, Tensor::from({{1.0, 0.0}, {0.0, 1.0}}), Tensor({2})), x);
  EXPECT_THROW(dense_forward(x, Tensor({2, 3}), Tensor({2})), ShapeError);
}

TEST(Dense, BackwardMatchesFiniteDifferences) {
  const Tensor upstream = random_tensor({4}, 21);
  ParamSet params;
  params.add("input", random_tensor({5}, 22));
  params.add("weights", random_tensor({4, 5}, 23));
  params.add("bias", random_tensor({4}, 24));
  const auto loss = [&](const ParamSet& p) {
    const Tensor out = dense_forward(p.get("input"), p.get("weights"), p.get("bias"));
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) sum += std::sin(out[i]) * upstream[i];
    return sum;
  };
  Tensor out = dense_forward(params.get("input"), params.get("weights"), params.get("bias"));
  Tensor grad_out(out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) grad_out[i] = std::cos(out[i]) * upstream[i];
  const DenseGrads g = dense_backward(grad_out, params.get("input"), params.get("weights"));
  ParamSet analytic;
  analytic.add("input", g.input);
  analytic.add("weights", g.weights);
  analytic.add("bias", g.bias);
  EXPECT_TRUE(finite_difference_check(loss, params, analytic).passed);
}

TEST(Activations, ScalarExamples) {
  EXPECT_EQ(relu(Tensor::from({-3.0, 2.0})), Tensor::from({0.0, 2.0}));
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(softmax(Tensor::from({0.0, 0.0, 0.0, 0.0})), Tensor::from({0.25, 0.25, 0.25, 0.25}));
}

TEST(Activations, SigmoidIsStableAtExtremes) {
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_TRUE(sigmoid(Tensor::from({-800.0, 800.0})).all_finite());
}

TEST(Activations, SoftmaxSumsToOneAndIsShiftInvariant) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tensor x = random_tensor({7}, seed, -30.0, 30.0);
    const Tensor p = softmax(x);
    double sum = 0.0;
    for (double v : p.values()) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    Tensor shifted = x;
    for (auto& v : shifted.values()) v += 123.456;
    EXPECT_LE(max_abs_diff(softmax(shifted), p), 1e-12);
  }
}

TEST(Activations, SoftmaxDoesNotOverflow) {
  const Tensor p = softmax(Tensor::from({1000.0, 1000.0}));
  EXPECT_EQ(p, Tensor::from({0.5, 0.5}));
}

TEST(Activations, SoftmaxRowsOfMatrix) {
  const Tensor p = softmax(Tensor::from({{0.0, 0.0}, {1.0, 1.0}}));
  EXPECT_EQ(p, Tensor::from({{0.5, 0.5}, {0.5, 0.5}}));
}

TEST(Activations, BackwardPassesMatchFiniteDifferences) {
  const Tensor upstream = random_tensor({6}, 31);
  ParamSet params;
  params.add("x", random_tensor({6}, 32, -3.0, 3.0));
  for (int which = 0; which < 3; ++which) {
    const auto apply = [which](const Tensor& x) {
      return which == 0 ? relu(x) : which == 1 ? sigmoid(x) : softmax(x);
    };
    const auto loss = [&](const ParamSet& p) {
      const Tensor y = apply(p.get("x"));
      double sum = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) sum += y[i] * upstream[i];
      return sum;
    };
    const Tensor x = params.get("x");
    const Tensor y = apply(x);
    ParamSet analytic;
    analytic.add("x", which == 0 ? relu_backward(upstream, x)
                      : which == 1 ? sigmoid_backward(upstream, y)
                                   : softmax_backward(upstream, y));
    EXPECT_TRUE(finite_difference_check(loss, params, analytic).passed) << "activation " << which;
  }
}

TEST(CrossEntropy, Examples) {
  EXPECT_EQ(categorical_cross_entropy(Tensor::from({0.0, 1.0, 0.0}), one_hot(1, 3)), 0.0);
  const Tensor uniform(Shape{20}, 1.0 / 20.0);
  EXPECT_NEAR(categorical_cross_entropy(uniform, one_hot(4, 20)), std::log(20.0), 1e-12);
  EXPECT_NEAR(std::log(20.0), 2.9957, 1e-4);
}

TEST(CrossEntropy, ClampsAtFloor) {
  const double loss = categorical_cross_entropy(Tensor::from({1.0, 0.0}), one_hot(1, 2));
  EXPECT_NEAR(loss, -std::log(kProbabilityFloor), 1e-9);
  EXPECT_TRUE(std::isfinite(loss));
}

TEST(CrossEntropy, NonNegativeAndZeroOnlyWhenCertain) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor p = softmax(random_tensor({5}, seed, -4.0, 4.0));
    EXPECT_GT(categorical_cross_entropy(p, one_hot(seed % 5, 5)), 0.0);
  }
}

TEST(CrossEntropy, RejectsNonOneHotTarget) {
  EXPECT_THROW(categorical_cross_entropy(Tensor::from({0.5, 0.5}), Tensor::from({0.5, 0.5})),
               std::invalid_argument);
  EXPECT_THROW(categorical_cross_entropy(Tensor::from({0.5, 0.5}), Tensor::from({1.0, 1.0})),
               std::invalid_argument);
  EXPECT_THROW(categorical_cross_entropy(Tensor::from({0.5, 0.5}), Tensor::from({0.0, 0.0})),
               std::invalid_argument);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  const Tensor target = one_hot(2, 4);
  ParamSet params;
  params.add("p", Tensor::from({0.1, 0.2, 0.3, 0.4}));
  const auto loss = [&](const ParamSet& p) { return categorical_cross_entropy(p.get("p"), target); };
  ParamSet analytic;
  analytic.add("p", categorical_cross_entropy_backward(params.get("p"), target));
  const GradCheckReport report = finite_difference_check(loss, params, analytic, {1e-6, 1e-6, 1e-8});
  EXPECT_TRUE(report.passed) << report.max_relative_error;
}

TEST(MaxPool, HandExample) {
  const MaxPoolResult r = maxpool1d_forward(Tensor::from({{1.0, 5.0, 2.0, 0.0, 3.0, 1.0}}), 3);
  EXPECT_EQ(r.output, Tensor::from({{5.0, 3.0}}));
}

TEST(MaxPool, ConstantSignalStaysConstant) {
  const MaxPoolResult r = maxpool1d_forward(Tensor({2, 10}, 4.0), 3);
  EXPECT_EQ(r.output, Tensor({2, 3}, 4.0));
}

TEST(MaxPool, BackwardRoutesToArgmax) {
  const Tensor input = Tensor::from({{1.0, 5.0, 2.0, 0.0, 3.0, 1.0, 9.0}});
  const MaxPoolResult r = maxpool1d_forward(input, 3);
  const Tensor g = maxpool1d_backward(Tensor::from({{2.0, 7.0}}), input.shape(), r.argmax);
  EXPECT_EQ(g, Tensor::from({{0.0, 2.0, 0.0, 0.0, 7.0, 0.0, 0.0}}));
}

TEST(Argmax, FirstMaximumWins) {
  const Tensor t = Tensor::from({1.0, 3.0, 3.0, 2.0});
  EXPECT_EQ(argmax(t.values()), 1u);
}
