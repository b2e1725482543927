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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cfx/errors.hpp"
#include "cfx/generator.hpp"
#include "cfx/gradient.hpp"
#include "cfx/model.hpp"
#include "cfx/random.hpp"

namespace cfx {

/// A unit, or an arbitrary unit-norm direction, in one layer's activation
/// space.
struct ProbeTarget {
  std::size_t layer = 0;
  std::variant<std::size_t, Vector> direction;

  static ProbeTarget unit(std::size_t layer, std::size_t unit) { return {layer, unit}; }
  static ProbeTarget along(std::size_t layer, Vector direction) { return {layer, std::move(direction)}; }

  ScalarObjective objective() const {
    if (const auto* u = std::get_if<std::size_t>(&direction)) {
      return objective::UnitActivation{layer, *u};
    }
    return objective::DirectionActivation{layer, std::get<Vector>(direction)};
  }
};

inline double direction_activation(const Network& net, std::span<const double> x,
                                   const ProbeTarget& target) {
  const auto obj = target.objective();
  validate_objective(net, obj);
  return evaluate_objective(net, x, obj);
}

inline double direction_activation(const Network& net, const Vector& x, const ProbeTarget& target) {
  return direction_activation(net, x.values(), target);
}

struct Exemplar {
  std::size_t row = 0;
  double activation = 0.0;
  friend bool operator==(const Exemplar&, const Exemplar&) = default;
};

/// Top-k rows by activation, descending; ties go to the lower row index.
inline std::vector<Exemplar> top_exemplars(const Network& net, const Dataset& data,
                                           const ProbeTarget& target, std::size_t k) {
  if (k == 0) throw ParameterError("k must be positive");
  if (data.empty()) throw DataError("cannot collate exemplars from an empty dataset");
  const auto obj = target.objective();
  validate_objective(net, obj);
  std::vector<Exemplar> all;
  all.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    all.push_back({i, evaluate_objective(net, data.row(i).values(), obj)});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Exemplar& a, const Exemplar& b) { return a.activation > b.activation; });
  if (all.size() > k) all.resize(k);
  return all;
}

enum class SeedKind { kZeros, kDatasetRow, kNoise };

struct MaximizeConfig {
  SeedKind seed_kind = SeedKind::kZeros;
  Vector seed_row;  // used with kDatasetRow
  std::uint64_t noise_seed = 0;
  double step_size = 0.1;
  std::size_t iterations = 200;
  Box box;
};

struct MaximizeResult {
  Vector input;                     // best iterate
  double activation = 0.0;
  double seed_activation = 0.0;
  std::vector<double> trace;        // best-so-far activation per iteration, starting at the seed
  bool zero_gradient = false;
};

/// Projected gradient ascent on the probe activation. Steps that lower the
/// activation are rejected and the step halved; the best iterate is
/// returned.
inline MaximizeResult activation_maximization(const Network& net, const ProbeTarget& target,
                                              const MaximizeConfig& cfg) {
  const std::size_t n = net.input_width();
  cfg.box.validate(n);
  if (!(cfg.step_size > 0.0)) throw ParameterError("step size must be positive");
  const auto obj = target.objective();
  validate_objective(net, obj);

  std::vector<double> x(n, 0.0);
  switch (cfg.seed_kind) {
    case SeedKind::kZeros:
      break;
    case SeedKind::kDatasetRow:
      if (cfg.seed_row.size() != n) throw ShapeError("seed row width mismatch");
      x = cfg.seed_row.raw();
      break;
    case SeedKind::kNoise: {
      Rng rng(cfg.noise_seed);
      for (std::size_t j = 0; j < n; ++j) x[j] = rng.uniform(cfg.box.lo[j], cfg.box.hi[j]);
      break;
    }
  }
  for (std::size_t j = 0; j < n; ++j) x[j] = cfg.box.clamp(j, x[j]);

  MaximizeResult out;
  double current = evaluate_objective(net, x, obj);
  out.seed_activation = current;
  out.trace.push_back(current);
  std::vector<double> cand(n);
  double step = cfg.step_size;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto g = grad_wrt_input(net, x, obj);
    if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) {
      out.zero_gradient = true;
      break;
    }
    for (std::size_t j = 0; j < n; ++j) cand[j] = cfg.box.clamp(j, x[j] + step * g[j]);
    const double next = evaluate_objective(net, cand, obj);
    if (next >= current) {
      x = cand;
      current = next;
    } else {
      step /= 2.0;
      if (step < 1e-12) break;
    }
    out.trace.push_back(current);
  }
  out.input = Vector(std::move(x));
  out.activation = current;
  return out;
}

/// |d activation / d x_j| for every input dimension.
inline std::vector<double> saliency_map(const Network& net, std::span<const double> x,
                                        const ProbeTarget& target) {
  auto g = grad_wrt_input(net, x, target.objective());
  for (double& v : g) v = std::abs(v);
  return g;
}

inline std::vector<double> saliency_map(const Network& net, const Vector& x, const ProbeTarget& target) {
  return saliency_map(net, x.values(), target);
}

/// ASCII portable graymap (P2, maxval 255), row-major, mapping [lo, hi]
/// linearly onto [0, 255].
inline std::string to_pgm(std::span<const double> values, std::size_t rows, std::size_t cols,
                          double lo = 0.0, double hi = 1.0) {
  if (rows * cols != values.size()) {
    throw ShapeError("image geometry " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " does not match " + std::to_string(values.size()) + " values");
  }
  if (!(hi > lo)) throw ParameterError("PGM range must satisfy hi > lo");
  std::ostringstream os;
  os << "P2\n" << cols << ' ' << rows << "\n255\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double t = std::clamp((values[r * cols + c] - lo) / (hi - lo), 0.0, 1.0);
      if (c) os << ' ';
      os << static_cast<int>(std::lround(t * 255.0));
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace cfx
