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

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cfx/metrics.hpp"
#include "cfx/model.hpp"
#include "cfx/random.hpp"
#include "cfx/semantics.hpp"

// Seeded synthetic fixtures. The generating processes are documented in
// data/README.md; the files under data/ are produced by `cfx train
// --fixture`.

namespace cfx::fixtures {

struct LoanFixture {
  Dataset data;
  Network model;
  FeatureCatalog catalog;
};

inline const std::vector<std::string>& loan_labels() {
  static const std::vector<std::string> labels{"denied", "offered"};
  return labels;
}

/// Loan applications: income (£), age, account balance (£), employment
/// years. Offered iff
///   (income - 50000) / 8000 + (balance - 12000) / 15000
///     + 0.05 * (employment - 6) + N(0, 0.5) > 0.
/// Age does not enter the rule.
inline Dataset loan_dataset(std::uint64_t seed = 0, std::size_t rows = 200) {
  Rng rng(seed);
  std::vector<Vector> xs;
  std::vector<std::size_t> ys;
  for (std::size_t i = 0; i < rows; ++i) {
    const double income = std::round(rng.uniform(15000.0, 90000.0) / 100.0) * 100.0;
    const double age = std::floor(rng.uniform(18.0, 71.0));
    const double balance = std::round(rng.uniform(0.0, 40000.0) / 10.0) * 10.0;
    const double employment = std::floor(rng.uniform(0.0, std::min(40.0, age - 16.0) + 1.0));
    const double score = (income - 50000.0) / 8000.0 + (balance - 12000.0) / 15000.0 +
                         0.05 * (employment - 6.0) + 0.5 * rng.normal();
    xs.push_back(Vector{income, age, balance, employment});
    ys.push_back(score > 0.0 ? 1 : 0);
  }
  return Dataset(std::move(xs), std::move(ys), {"income", "age", "balance", "employment_years"});
}

inline FeatureCatalog loan_catalog() {
  std::vector<FeatureEntry> f{
      {"annual income", "income", "£", FeatureKind::kInteger, 0, true},
      {"age", "", "", FeatureKind::kInteger, 0, false},
      {"account balance", "balance", "£", FeatureKind::kInteger, 0, true},
      {"length of employment", "employment", "", FeatureKind::kInteger, 0, true},
  };
  return FeatureCatalog(std::move(f), {"denied a loan", "offered a loan"});
}

/// Standardizes, trains, and folds the scaling back into the first layer so
/// the model reads raw values.
inline Network train_standardized(const Dataset& data, const std::vector<std::size_t>& hidden,
                                  std::vector<std::string> labels, bool binary_sigmoid,
                                  const TrainOptions& opt) {
  const std::size_t w = data.width();
  std::vector<double> mean(w, 0.0), scale(w, 0.0);
  for (std::size_t j = 0; j < w; ++j) {
    const auto col = data.column(j);
    for (double v : col) mean[j] += v;
    mean[j] /= static_cast<double>(col.size());
    for (double v : col) scale[j] += (v - mean[j]) * (v - mean[j]);
    scale[j] = std::sqrt(scale[j] / static_cast<double>(col.size()));
    if (!(scale[j] > 0.0)) scale[j] = 1.0;
  }
  std::vector<Vector> rows;
  for (const auto& r : data.rows()) {
    std::vector<double> z(w);
    for (std::size_t j = 0; j < w; ++j) z[j] = (r[j] - mean[j]) / scale[j];
    rows.emplace_back(std::move(z));
  }
  const Dataset standardized(std::move(rows), data.labels());
  auto init = random_network(w, hidden, Activation::kRelu, labels, opt.seed, binary_sigmoid);
  auto trained = train(init, standardized, opt);
  auto folded = fold_input_scaling(trained, mean, scale);
  return Network(folded.layers(), std::move(labels), data.feature_names());
}

inline LoanFixture loan_fixture(std::uint64_t seed = 0) {
  LoanFixture f{loan_dataset(seed), {}, loan_catalog()};
  TrainOptions opt;
  opt.epochs = 20;
  opt.step_size = 0.03;
  opt.seed = seed;
  f.model = train_standardized(f.data, {6}, loan_labels(), true, opt);
  return f;
}

// ---------------------------------------------------------------------------
// 8x8 blob images

inline constexpr std::size_t kBlobSide = 8;

inline const std::vector<std::string>& blob_labels() {
  static const std::vector<std::string> labels{"dark blob", "bright blob"};
  return labels;
}

/// 8x8 grayscale images: background U(0.25, 0.55), plus a 3x3 blob at a
/// random position filled with U(0.75, 0.95) (bright, class 1) or
/// U(0.02, 0.12) (dark, class 0). Classes alternate by row.
inline Dataset blob_dataset(std::uint64_t seed = 0, std::size_t rows = 200) {
  Rng rng(seed);
  std::vector<Vector> xs;
  std::vector<std::size_t> ys;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t cls = i % 2;
    std::vector<double> img(kBlobSide * kBlobSide);
    for (double& v : img) v = rng.uniform(0.25, 0.55);
    const std::size_t r0 = rng.index(kBlobSide - 2), c0 = rng.index(kBlobSide - 2);
    for (std::size_t r = r0; r < r0 + 3; ++r) {
      for (std::size_t c = c0; c < c0 + 3; ++c) {
        img[r * kBlobSide + c] = cls == 1 ? rng.uniform(0.75, 0.95) : rng.uniform(0.02, 0.12);
      }
    }
    xs.emplace_back(std::move(img));
    ys.push_back(cls);
  }
  std::vector<std::string> names;
  for (std::size_t r = 0; r < kBlobSide; ++r) {
    for (std::size_t c = 0; c < kBlobSide; ++c) {
      names.push_back("p" + std::to_string(r) + "_" + std::to_string(c));
    }
  }
  return Dataset(std::move(xs), std::move(ys), std::move(names));
}

struct BlobFixture {
  Dataset data;
  Network model;
};

inline BlobFixture blob_fixture(std::uint64_t seed = 0) {
  BlobFixture f{blob_dataset(seed), {}};
  TrainOptions opt;
  opt.epochs = 60;
  opt.step_size = 0.05;
  opt.seed = seed;
  auto init = random_network(kBlobSide * kBlobSide, {16}, Activation::kRelu, blob_labels(), seed,
                             /*binary_sigmoid=*/false, f.data.feature_names());
  f.model = train(init, f.data, opt);
  return f;
}

// ---------------------------------------------------------------------------
// 4x4 one-pixel fixture

inline constexpr std::size_t kPixel4Side = 4;
inline constexpr std::size_t kPixel4Trigger = 1 * kPixel4Side + 2;  // pixel (1,2)

/// Softmax over {"plain", "marked"} with logit gap
///   6 * x(1,2) + 0.3 * sum(other pixels) - 6.3.
/// Raising pixel (1,2) is the only single-pixel edit that can flip a plain
/// image with values in [0, 0.4].
inline Network pixel4_network() {
  const std::size_t n = kPixel4Side * kPixel4Side;
  std::vector<double> w(2 * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) w[n + j] = j == kPixel4Trigger ? 6.0 : 0.3;
  std::vector<LayerSpec> layers{
      {Matrix(2, n, std::move(w)), Vector{0.0, -6.3}, Activation::kSoftmax}};
  return Network(std::move(layers), {"plain", "marked"});
}

/// Images with every pixel U(0, 0.4).
inline std::vector<Vector> pixel4_images(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> img(kPixel4Side * kPixel4Side);
    for (double& v : img) v = rng.uniform(0.0, 0.4);
    out.emplace_back(std::move(img));
  }
  return out;
}

/// {0.0, 0.1, ..., 1.0}
inline std::vector<double> pixel_value_grid() {
  std::vector<double> v;
  for (int i = 0; i <= 10; ++i) v.push_back(static_cast<double>(i) / 10.0);
  return v;
}

}  // namespace cfx::fixtures
