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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "cfx/cfx.hpp"
#include "oracles.hpp"

using namespace cfx;

namespace {

// Hidden layer 0 is linear (identity activation) with unit 0 weights `w`
// and a zero row for unit 1 (a dead unit).
Network linear_probe_net(const std::vector<double>& w) {
  const std::size_t n = w.size();
  std::vector<double> first(2 * n, 0.0);
  std::copy(w.begin(), w.end(), first.begin());
  std::vector<LayerSpec> layers{{Matrix(2, n, first), Vector{0.0, 0.0}, Activation::kIdentity},
                                {Matrix(2, 2, {1.0, 0.0, 0.0, 1.0}), Vector{0.0, 0.0}, Activation::kSoftmax}};
  return Network(std::move(layers), {"a", "b"});
}

std::vector<double> random_weights(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> mag(0.1, 2.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> w(n);
  for (double& v : w) v = sign(gen) ? mag(gen) : -mag(gen);
  return w;
}

}  // namespace

TEST(Direction, BasisMatchesForwardTrace) {
  const auto net = oracle::random_net(5, false);
  const Vector x(oracle::random_point(1, net.input_width()));
  const auto t = forward(net, x);
  const auto width = net.layers()[0].output_width();
  for (std::size_t u = 0; u < width; ++u) {
    std::vector<double> e(width, 0.0);
    e[u] = 1.0;
    EXPECT_EQ(direction_activation(net, x, ProbeTarget::along(0, Vector(e))), t.activations[0][u]);
    EXPECT_EQ(direction_activation(net, x, ProbeTarget::unit(0, u)), t.activations[0][u]);
  }
}

TEST(Direction, NormalizedActivationGivesItsNorm) {
  const auto net = oracle::random_net(8, true);
  const Vector x(oracle::random_point(2, net.input_width()));
  const auto a = forward(net, x).activations[0];
  const double norm = l2_norm(a);
  ASSERT_GT(norm, 0.0);
  std::vector<double> d(a.begin(), a.end());
  for (double& v : d) v /= norm;
  EXPECT_NEAR(direction_activation(net, x, ProbeTarget::along(0, Vector(d))), norm, 1e-12);
}

TEST(Direction, ZeroInputOnZeroBiasReluIsZero) {
  std::vector<LayerSpec> layers{{Matrix(3, 2, {1, -2, 3, 4, -5, 6}), Vector::zeros(3), Activation::kRelu},
                                {Matrix(2, 3, std::vector<double>(6, 1.0)), Vector::zeros(2), Activation::kSoftmax}};
  const Network net(std::move(layers), {"a", "b"});
  EXPECT_EQ(direction_activation(net, Vector::zeros(2), ProbeTarget::along(0, Vector{0.6, 0.0, 0.8})), 0.0);
}

TEST(Direction, LinearInDirection) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto net = oracle::random_net(seed + 70, seed % 2 == 0);
    const Vector x(oracle::random_point(seed, net.input_width()));
    const auto a = forward(net, x).activations[0];
    std::vector<double> d1(a.size()), d2(a.size());
    for (auto& v : d1) v = normal(gen);
    for (auto& v : d2) v = normal(gen);
    const double alpha = normal(gen), beta = normal(gen);
    std::vector<double> mix(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mix[i] = alpha * d1[i] + beta * d2[i];
    // Pre-normalization: dot products with the frozen activation vector.
    EXPECT_NEAR(dot(a, mix), alpha * dot(a, d1) + beta * dot(a, d2), 1e-12);
    // And through the probe, after normalizing each direction.
    const double n1 = l2_norm(d1);
    std::vector<double> u1(d1);
    for (double& v : u1) v /= n1;
    EXPECT_NEAR(direction_activation(net, x, ProbeTarget::along(0, Vector(u1))) * n1, dot(a, d1), 1e-12);
  }
}

TEST(Direction, RejectsNonUnitDirection) {
  const auto net = linear_probe_net({1.0, 2.0});
  EXPECT_THROW(direction_activation(net, Vector{0.0, 0.0}, ProbeTarget::along(0, Vector{1.0, 1.0})),
               ParameterError);
  EXPECT_THROW(direction_activation(net, Vector{0.0, 0.0}, ProbeTarget::unit(0, 5)), IndexError);
}

TEST(Exemplars, MatchIndependentFullScan) {
  const auto f = fixtures::blob_fixture(0);
  for (std::size_t unit : {0u, 3u, 7u}) {
    const auto target = ProbeTarget::unit(0, unit);
    const auto ex = top_exemplars(f.model, f.data, target, f.data.size());
    std::vector<std::pair<double, std::size_t>> scan;
    for (std::size_t i = 0; i < f.data.size(); ++i) {
      scan.push_back({oracle::naive_forward(f.model, f.data.row(i).raw())[0][unit], i});
    }
    std::sort(scan.begin(), scan.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    ASSERT_EQ(ex.size(), scan.size());
    for (std::size_t i = 0; i < ex.size(); ++i) {
      EXPECT_EQ(ex[i].row, scan[i].second);
      EXPECT_NEAR(ex[i].activation, scan[i].first, 1e-12);
    }
    EXPECT_EQ(top_exemplars(f.model, f.data, target, 5), std::vector<Exemplar>(ex.begin(), ex.begin() + 5));
  }
}

TEST(Exemplars, PlantedRowAndTies) {
  const auto net = linear_probe_net({1.0, 1.0});
  const Dataset data({Vector{0.1, 0.2}, Vector{0.5, 0.5}, Vector{9.0, 9.0}, Vector{0.5, 0.5}, Vector{0.0, 0.0}},
                     {0, 0, 0, 0, 0});
  const auto ex = top_exemplars(net, data, ProbeTarget::unit(0, 0), 3);
  ASSERT_EQ(ex.size(), 3u);
  EXPECT_EQ(ex[0].row, 2u);
  EXPECT_EQ(ex[1].row, 1u);
  EXPECT_EQ(ex[2].row, 3u);
  EXPECT_THROW(top_exemplars(net, data, ProbeTarget::unit(0, 0), 0), ParameterError);
}

// Enumerates every corner of [0,1]^n for the analytic maximizer.
TEST(Maximize, LinearUnitReachesBestCorner) {
  for (std::size_t n = 1; n <= 10; ++n) {
    const auto w = random_weights(n, n);
    const auto net = linear_probe_net(w);
    double best = -1e300;
    std::vector<double> corner;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<double> c(n);
      for (std::size_t i = 0; i < n; ++i) c[i] = (mask >> i) & 1 ? 1.0 : 0.0;
      const double v = dot(w, c);
      if (v > best) {
        best = v;
        corner = c;
      }
    }
    MaximizeConfig cfg;
    cfg.box = Box::uniform(n, 0.0, 1.0);
    const auto r = activation_maximization(net, ProbeTarget::unit(0, 0), cfg);
    double linf = 0.0;
    for (std::size_t i = 0; i < n; ++i) linf = std::max(linf, std::abs(r.input[i] - corner[i]));
    EXPECT_LE(linf, 1e-3) << "n = " << n;
    EXPECT_NEAR(r.activation, best, 1e-9);
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_GE(r.trace[i], r.trace[i - 1]);
    EXPECT_TRUE(cfg.box.contains(r.input.values()));
  }
}

TEST(Maximize, ZeroIterationsReturnsSeed) {
  const auto net = linear_probe_net({1.0, -1.0, 0.5});
  MaximizeConfig cfg;
  cfg.box = Box::uniform(3, 0.0, 1.0);
  cfg.iterations = 0;
  cfg.seed_kind = SeedKind::kDatasetRow;
  cfg.seed_row = Vector{0.2, 0.3, 0.4};
  const auto r = activation_maximization(net, ProbeTarget::unit(0, 0), cfg);
  EXPECT_EQ(r.input, cfg.seed_row);
  EXPECT_EQ(r.trace.size(), 1u);
}

TEST(Maximize, DeadUnitIsFlagged) {
  const auto net = linear_probe_net({1.0, -1.0, 0.5});
  MaximizeConfig cfg;
  cfg.box = Box::uniform(3, 0.0, 1.0);
  cfg.seed_kind = SeedKind::kNoise;
  cfg.noise_seed = 4;
  const auto r = activation_maximization(net, ProbeTarget::unit(0, 1), cfg);
  EXPECT_TRUE(r.zero_gradient);
  EXPECT_EQ(r.activation, r.seed_activation);
  for (double v : r.trace) EXPECT_EQ(v, r.trace.front());
  // The returned input is the noise seed, so a second run agrees.
  EXPECT_EQ(activation_maximization(net, ProbeTarget::unit(0, 1), cfg).input, r.input);
}

TEST(Saliency, LinearUnitIsAbsoluteWeight) {
  const std::vector<double> w{1.5, -0.25, 0.0, -3.0};
  const auto net = linear_probe_net(w);
  const auto s = saliency_map(net, Vector{0.3, 0.1, 0.9, 0.5}, ProbeTarget::unit(0, 0));
  ASSERT_EQ(s.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(s[i], std::abs(w[i]));
  for (double v : saliency_map(net, Vector{0.3, 0.1, 0.9, 0.5}, ProbeTarget::unit(0, 1))) EXPECT_EQ(v, 0.0);
}

TEST(Saliency, MatchesFiniteDifferencesOnBlobs) {
  const auto f = fixtures::blob_fixture(0);
  for (std::size_t row : {0u, 1u, 2u}) {
    for (std::size_t unit : {0u, 5u}) {
      const auto target = ProbeTarget::unit(0, unit);
      const auto s = saliency_map(f.model, f.data.row(row), target);
      const auto fd = oracle::central_difference(
          [&](const std::vector<double>& p) { return direction_activation(f.model, p, target); },
          f.data.row(row).raw());
      ASSERT_EQ(s.size(), f.model.input_width());
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double ref = std::abs(fd[j]);
        if (std::max(ref, s[j]) > 1e-6) {
          EXPECT_NEAR(s[j], ref, 1e-4 * std::max(ref, s[j]));
        }
      }
    }
  }
}

TEST(Pgm, FormatAndClamping) {
  const std::vector<double> v{0.0, 0.5, 1.0, 2.0, -1.0, 0.25};
  EXPECT_EQ(to_pgm(v, 2, 3), "P2\n3 2\n255\n0 128 255\n255 0 64\n");
  EXPECT_THROW(to_pgm(v, 2, 2), ShapeError);
  EXPECT_THROW(to_pgm(v, 2, 3, 1.0, 1.0), ParameterError);
}
