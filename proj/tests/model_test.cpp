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
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "cfx/cfx.hpp"
#include "oracles.hpp"

using namespace cfx;

namespace {

// Two Gaussian blobs around (-2,-2) and (2,2), 50 points each.
Dataset two_blobs() {
  std::mt19937_64 gen(0);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<Vector> rows;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 100; ++i) {
    const double c = i % 2 ? 2.0 : -2.0;
    rows.push_back(Vector{c + noise(gen), c + noise(gen)});
    labels.push_back(i % 2);
  }
  return Dataset(std::move(rows), std::move(labels));
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cfx_model_test_" + name)).string();
}

}  // namespace

TEST(Network, ValidatesOutputLayer) {
  std::vector<LayerSpec> relu_out{{Matrix::identity(2), Vector{0.0, 0.0}, Activation::kRelu}};
  EXPECT_THROW(Network(relu_out, {"a", "b"}), Error);
  std::vector<LayerSpec> wide_sigmoid{{Matrix::identity(2), Vector{0.0, 0.0}, Activation::kSigmoid}};
  EXPECT_THROW(Network(wide_sigmoid, {"a", "b"}), Error);
  std::vector<LayerSpec> softmax{{Matrix::identity(3), Vector{0.0, 0.0, 0.0}, Activation::kSoftmax}};
  EXPECT_THROW(Network(softmax, {"a", "b"}), Error);
  std::vector<LayerSpec> gap{{Matrix::identity(2), Vector{0.0, 0.0}, Activation::kRelu},
                             {Matrix(2, 3, std::vector<double>(6, 1.0)), Vector{0.0, 0.0}, Activation::kSoftmax}};
  EXPECT_THROW(Network(gap, {"a", "b"}), ShapeError);
  EXPECT_THROW(Network({}, {"a", "b"}), Error);
}

TEST(Forward, ZeroWeightSoftmaxIsUniform) {
  std::vector<LayerSpec> layers{{Matrix::zeros(4, 3), Vector::zeros(4), Activation::kSoftmax}};
  const Network net(std::move(layers), {"a", "b", "c", "d"});
  for (double p : forward(net, Vector{5.0, -1.0, 2.0}).probabilities) EXPECT_EQ(p, 0.25);
}

TEST(Forward, LogisticFixture) {
  const auto net = oracle::logistic({1.0, 1.0}, 0.0);
  const auto t = forward(net, Vector{-1.0, -1.0});
  // 1 / (1 + e^2)
  EXPECT_NEAR(t.probabilities[1], 0.11920292202211755, 1e-15);
  EXPECT_NEAR(t.probabilities[0] + t.probabilities[1], 1.0, 1e-15);
  EXPECT_EQ(t.activations.size(), 1u);
}

TEST(Forward, MatchesIndependentForwardAndNormalizes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto net = oracle::random_net(seed, seed % 2 == 0);
    const auto x = oracle::random_point(seed + 1, net.input_width());
    const auto t = forward(net, Vector(x));
    const auto ref = oracle::naive_forward(net, x);
    ASSERT_EQ(t.activations.size(), net.layer_count());
    for (std::size_t l = 0; l < ref.size(); ++l) {
      for (std::size_t i = 0; i < ref[l].size(); ++i) EXPECT_NEAR(t.activations[l][i], ref[l][i], 1e-12);
    }
    double total = 0.0;
    for (double p : t.probabilities) {
      EXPECT_GE(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Forward, RejectsWrongWidth) {
  const auto net = oracle::logistic({1.0, 1.0}, 0.0);
  EXPECT_THROW(forward(net, Vector{1.0}), ShapeError);
}

TEST(Predict, TieBreaksAndBoundary) {
  std::vector<LayerSpec> layers{{Matrix::zeros(2, 1), Vector{0.0, 0.0}, Activation::kSoftmax}};
  const Network tie(std::move(layers), {"first", "second"});
  EXPECT_EQ(predict(tie, Vector{3.0}).index, 0u);
  EXPECT_EQ(predict(tie, Vector{3.0}).label, "first");
  const auto logistic = oracle::logistic({1.0}, 0.0);
  EXPECT_EQ(predict(logistic, Vector{0.0}).index, 1u);
  EXPECT_EQ(predict(logistic, Vector{-1e-9}).index, 0u);
}

TEST(Predict, InvariantUnderLogitShift) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto net = oracle::random_net(seed + 40, false);
    auto layers = net.layers();
    std::vector<double> b = layers.back().bias.raw();
    for (double& v : b) v += 3.25;
    layers.back().bias = Vector(b);
    const Network shifted(layers, net.class_labels());
    const auto x = Vector(oracle::random_point(seed, net.input_width()));
    EXPECT_EQ(predict_index(net, x.values()), predict_index(shifted, x.values()));
  }
}

TEST(Predict, LoanModelKeepsDeniedRowsDenied) {
  const auto f = fixtures::loan_fixture(0);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    const auto& x = f.data.row(i);
    // Clearly denied applicants: low income and low balance.
    if (f.data.labels()[i] == 0 && x[0] < 30000 && x[2] < 10000) {
      EXPECT_EQ(predict(f.model, x).label, "denied") << "row " << i;
      ++checked;
    }
  }
  EXPECT_GT(checked, 5u);
}

TEST(Split, ComposesToFullForward) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto net = oracle::random_net(seed + 200, seed % 2 == 1);
    for (std::size_t l = 0; l + 1 < net.layer_count(); ++l) {
      const auto [head, tail] = split_at_layer(net, l);
      EXPECT_EQ(head.layers().size(), l + 1);
      EXPECT_EQ(tail.layer_count(), net.layer_count() - l - 1);
      for (std::uint64_t k = 0; k < 100; ++k) {
        const Vector x(oracle::random_point(seed * 1000 + k, net.input_width()));
        const auto direct = forward(net, x).probabilities;
        const auto composed = forward(tail, head.apply(x)).probabilities;
        for (std::size_t c = 0; c < direct.size(); ++c) EXPECT_NEAR(direct[c], composed[c], 1e-12);
      }
    }
  }
}

TEST(Split, LastLayerHasNoTail) {
  const auto net = fixtures::loan_fixture(0).model;
  EXPECT_THROW(split_at_layer(net, net.layer_count() - 1), IndexError);
  const auto [head, tail] = split_at_layer(net, 0);
  EXPECT_EQ(tail.layer_count(), 1u);
}

TEST(Train, ZeroEpochsIsNoOp) {
  const auto data = two_blobs();
  const auto init = random_network(2, {4}, Activation::kRelu, {"a", "b"}, 3);
  TrainOptions opt;
  opt.epochs = 0;
  EXPECT_EQ(train(init, data, opt), init);
}

TEST(Train, SeparableBlobsReachHighAccuracy) {
  const auto data = two_blobs();
  // The line x + y = 0 separates the sample, so it is linearly separable.
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double s = data.row(i)[0] + data.row(i)[1];
    EXPECT_EQ(s > 0.0, data.labels()[i] == 1u);
  }
  const auto init = random_network(2, {}, Activation::kRelu, {"a", "b"}, 0);
  TrainOptions opt;
  opt.epochs = 200;
  opt.seed = 0;
  const auto report = train_with_history(init, data, opt);
  EXPECT_GE(accuracy(report.network, data), 0.95);
  ASSERT_EQ(report.epoch_losses.size(), 200u);
  EXPECT_LT(report.epoch_losses[0], report.initial_loss);
  EXPECT_DOUBLE_EQ(report.initial_loss, mean_cross_entropy(init, data));
}

TEST(Train, IsDeterministic) {
  const auto data = two_blobs();
  const auto init = random_network(2, {5}, Activation::kSigmoid, {"a", "b"}, 1, false);
  TrainOptions opt;
  opt.epochs = 20;
  opt.seed = 4;
  EXPECT_EQ(train(init, data, opt), train(init, data, opt));
}

TEST(Serialization, RoundTripIsBitExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto net = oracle::random_net(seed + 900, seed % 2 == 0);
    const auto text = model_to_json(net);
    const auto back = model_from_json(text);
    EXPECT_EQ(back, net);
    EXPECT_EQ(model_to_json(back), text);
  }
  const auto net = fixtures::loan_fixture(0).model;
  const auto path = temp_path("loan.json");
  save_model(net, path);
  const auto back = load_model(path);
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Vector x(oracle::random_point(k, 4, 20000.0));
    EXPECT_EQ(forward(net, x).probabilities, forward(back, x).probabilities);
  }
  EXPECT_EQ(back.feature_names(), net.feature_names());
  std::filesystem::remove(path);
}

TEST(Serialization, ParseErrorsNameTheProblem) {
  EXPECT_THROW(model_from_json(""), ParseError);
  EXPECT_THROW(model_from_json("   \n"), ParseError);
  EXPECT_THROW(model_from_json("{not json"), ParseError);
  EXPECT_THROW(model_from_json(R"({"class_labels": ["a","b"], "layers": []})"), ParseError);
  auto text = model_to_json(oracle::logistic({1.0, 2.0}, 0.5));
  const auto pos = text.find("\"bias\": [");
  ASSERT_NE(pos, std::string::npos);
  text.insert(pos + 9, "1, ");
  try {
    model_from_json(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("bias"), std::string::npos) << e.what();
  }
}

TEST(Serialization, MissingFileIsIoError) {
  try {
    load_model(temp_path("does_not_exist.json"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.exit_code(), 3);
  }
}

TEST(Dataset, Validation) {
  EXPECT_THROW(Dataset({Vector{1.0}}, {0, 1}), DataError);
  EXPECT_THROW(Dataset({Vector{1.0}, Vector{1.0, 2.0}}, {0, 1}), ShapeError);
  const Dataset d({Vector{1.0}}, {3});
  EXPECT_THROW(d.check_labels(2), DataError);
}
