// Copyright 2026 The cfx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "cfx/cfx.hpp"
#include "oracles.hpp"

using namespace cfx;

TEST(Vector, RejectsNonFiniteAndEmpty) {
  EXPECT_THROW(Vector(std::vector<double>{}), ShapeError);
  EXPECT_THROW((Vector{1.0, std::numeric_limits<double>::quiet_NaN()}), Error);
  EXPECT_THROW((Vector{std::numeric_limits<double>::infinity()}), Error);
  EXPECT_THROW((Vector{1.0}.at(1)), IndexError);
}

TEST(Matrix, RejectsWrongElementCount) {
  EXPECT_THROW(Matrix(2, 2, {1.0, 2.0, 3.0}), ShapeError);
  EXPECT_THROW(Matrix(1, 1, {std::numeric_limits<double>::quiet_NaN()}), Error);
}

TEST(Affine, HandExamples) {
  EXPECT_EQ(affine_forward(Matrix::identity(2), Vector{0.0, 0.0}, Vector{3.0, -1.0}), (Vector{3.0, -1.0}));
  EXPECT_EQ(affine_forward(Matrix(1, 2, {1.0, 1.0}), Vector{0.0}, Vector{-1.0, -1.0}), (Vector{-2.0}));
  EXPECT_EQ(affine_forward(Matrix(2, 2, {2.0, 0.0, 0.0, 3.0}), Vector{1.0, -1.0}, Vector{1.0, 1.0}),
            (Vector{3.0, 2.0}));
}

TEST(Affine, ShapeMismatchNamesBothSides) {
  try {
    affine_forward(Matrix::identity(2), Vector{0.0, 0.0}, Vector{1.0, 2.0, 3.0});
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("2 columns"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("length 3"), std::string::npos);
  }
  EXPECT_THROW(affine_forward(Matrix::identity(2), Vector{0.0}, Vector{1.0, 2.0}), ShapeError);
}

TEST(Activation, HandExamples) {
  EXPECT_EQ(activation_forward(Activation::kRelu, Vector{-1.0, 2.0}), (Vector{0.0, 2.0}));
  EXPECT_EQ(activation_forward(Activation::kSigmoid, Vector{0.0})[0], 0.5);
  const auto s = activation_forward(Activation::kSoftmax, Vector{0.0, std::log(3.0)});
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(Activation, SoftmaxSurvivesLargeLogits) {
  const auto s = activation_forward(Activation::kSoftmax, Vector{1000.0, 1000.0});
  EXPECT_EQ(s[0], 0.5);
  EXPECT_EQ(s[1], 0.5);
}

TEST(Activation, SoftmaxNormalizationAndShiftInvarianceProperty) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal(0.0, 5.0);
  std::uniform_int_distribution<int> len(1, 12);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> z(len(gen));
    for (double& v : z) v = normal(gen);
    const double c = normal(gen) * 10.0;
    std::vector<double> shifted = z;
    for (double& v : shifted) v += c;
    const auto a = activation_forward(Activation::kSoftmax, z);
    const auto b = activation_forward(Activation::kSoftmax, shifted);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_GE(a[i], 0.0);
      EXPECT_LE(a[i], 1.0);
      EXPECT_NEAR(a[i], b[i], 1e-12);
      total += a[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Activation, ParseRoundTrip) {
  for (auto a : {Activation::kIdentity, Activation::kRelu, Activation::kSigmoid, Activation::kSoftmax}) {
    EXPECT_EQ(parse_activation(to_string(a)), a);
  }
  EXPECT_THROW(parse_activation("tanh"), ParseError);
}

TEST(Gradient, SigmoidUnitAtZeroIsQuarterW) {
  const auto net = oracle::logistic({2.0, -3.0, 0.5}, 0.0);
  const auto g = grad_wrt_input(net, Vector{0.0, 0.0, 0.0}, objective::ClassProbability{1});
  EXPECT_EQ(g[0], 0.25 * 2.0);
  EXPECT_EQ(g[1], 0.25 * -3.0);
  EXPECT_EQ(g[2], 0.25 * 0.5);
}

TEST(Gradient, ZeroWeightNetworkHasZeroGradient) {
  std::vector<LayerSpec> layers{
      {Matrix::zeros(4, 3), Vector{0.1, 0.2, 0.3, 0.4}, Activation::kRelu},
      {Matrix::zeros(3, 4), Vector{0.0, 1.0, 2.0}, Activation::kSoftmax}};
  const Network net(std::move(layers), {"a", "b", "c"});
  const Vector x{0.3, -2.0, 5.0};
  for (const ScalarObjective& obj :
       {ScalarObjective{objective::ClassProbability{2}}, ScalarObjective{objective::UnitActivation{0, 1}}}) {
    for (double v : grad_wrt_input(net, x, obj)) EXPECT_EQ(v, 0.0);
  }
}

TEST(Gradient, ReluDerivativeAtZeroIsZero) {
  std::vector<LayerSpec> layers{{Matrix::identity(1), Vector{0.0}, Activation::kRelu},
                                {Matrix(1, 1, {1.0}), Vector{0.0}, Activation::kSigmoid}};
  const Network net(std::move(layers), {"no", "yes"});
  EXPECT_EQ(grad_wrt_input(net, Vector{0.0}, objective::ClassProbability{1})[0], 0.0);
}

TEST(Gradient, InvalidObjectivesAreRejected) {
  const auto net = oracle::random_net(3, false);
  const Vector x(oracle::random_point(1, net.input_width()));
  EXPECT_THROW(grad_wrt_input(net, x, objective::ClassProbability{99}), IndexError);
  EXPECT_THROW(grad_wrt_input(net, x, objective::UnitActivation{99, 0}), IndexError);
  const auto width = net.layers()[0].output_width();
  std::vector<double> d(width, 1.0);
  EXPECT_THROW(grad_wrt_input(net, x, objective::DirectionActivation{0, Vector(d)}), ParameterError);
}

TEST(FiniteDifference, LinearAndConstantObjectives) {
  std::vector<LayerSpec> layers{{Matrix(2, 3, {3.0, 0.0, 0.0, 0.0, 0.0, 0.0}), Vector{0.0, 0.0}, Activation::kIdentity},
                                {Matrix::identity(2), Vector{0.0, 0.0}, Activation::kSoftmax}};
  const Network net(std::move(layers), {"a", "b"});
  const Vector x{0.7, -0.2, 1.1};
  const auto lin = finite_difference_gradient(net, x, objective::UnitActivation{0, 0}, 1e-5);
  EXPECT_NEAR(lin[0], 3.0, 1e-6);
  EXPECT_NEAR(lin[1], 0.0, 1e-6);
  EXPECT_NEAR(lin[2], 0.0, 1e-6);
  const auto flat = finite_difference_gradient(net, x, objective::UnitActivation{0, 1}, 1e-5);
  for (double v : flat) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_THROW(finite_difference_gradient(net, x, objective::UnitActivation{0, 0}, 0.0), ParameterError);
}

namespace {

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    if (scale <= 1e-6) continue;
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace

// Every objective kind on random fixtures, against both the library's
// finite differences and the independent oracle.
TEST(Gradient, MatchesCentralDifferencesOnRandomNetworks) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (bool binary : {true, false}) {
      const auto net = oracle::random_net(seed * 31 + binary, binary);
      const auto xs = oracle::random_point(seed + 100, net.input_width());
      const Vector x(xs);
      std::vector<ScalarObjective> objectives{objective::ClassProbability{0},
                                              objective::UnitActivation{0, 0},
                                              objective::Penalty{net.class_count() - 1, 0.6, 3.0,
                                                                 MetricSpec::l2(),
                                                                 Vector(oracle::random_point(seed + 7, xs.size()))}};
      std::vector<double> dir(net.layers()[0].output_width(), 0.0);
      dir[0] = 0.6;
      if (dir.size() > 1) dir[1] = 0.8; else dir[0] = 1.0;
      objectives.push_back(objective::DirectionActivation{0, Vector(dir)});
      for (const auto& obj : objectives) {
        const auto g = grad_wrt_input(net, x, obj);
        const auto fd = finite_difference_gradient(net, x, obj, 1e-5);
        const auto indep = oracle::central_difference(
            [&](const std::vector<double>& p) { return evaluate_objective(net, p, obj); }, xs);
        EXPECT_LT(max_relative_error(g.raw(), fd.raw()), 1e-4) << "seed " << seed;
        EXPECT_LT(max_relative_error(g.raw(), indep), 1e-4) << "seed " << seed;
      }
    }
  }
}

TEST(Gradient, ClassProbabilityAgreesWithIndependentForward) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto net = oracle::random_net(seed + 500, false);
    const auto xs = oracle::random_point(seed, net.input_width());
    const auto g = grad_wrt_input(net, Vector(xs), objective::ClassProbability{0});
    const auto ref = oracle::central_difference(
        [&](const std::vector<double>& p) { return oracle::naive_forward(net, p).back()[0]; }, xs);
    EXPECT_LT(max_relative_error(g.raw(), ref), 1e-4);
  }
}

TEST(Determinism, RepeatedEvaluationIsBitIdentical) {
  const auto net = oracle::random_net(42, false);
  const Vector x(oracle::random_point(9, net.input_width()));
  const auto a = forward(net, x);
  const auto b = forward(net, x);
  EXPECT_EQ(a.probabilities, b.probabilities);
  EXPECT_EQ(grad_wrt_input(net, x, objective::ClassProbability{0}),
            grad_wrt_input(net, x, objective::ClassProbability{0}));
}

TEST(Random, SameSeedSameStream) {
  Rng a(5), b(5), c(6);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_NE(a.uniform(), c.uniform());
}
