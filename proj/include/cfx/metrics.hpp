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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfx/errors.hpp"
#include "cfx/model.hpp"
#include "cfx/numerics.hpp"

namespace cfx {

inline constexpr double kDefaultL0Tolerance = 1e-6;

enum class MetricKind { kL0, kL1, kL2, kLinf, kMadL1 };

inline std::string_view to_string(MetricKind k) {
  switch (k) {
    case MetricKind::kL0: return "l0";
    case MetricKind::kL1: return "l1";
    case MetricKind::kL2: return "l2";
    case MetricKind::kLinf: return "linf";
    case MetricKind::kMadL1: return "madl1";
  }
  return "l2";
}

inline MetricKind parse_metric_kind(std::string_view s) {
  if (s == "l0") return MetricKind::kL0;
  if (s == "l1") return MetricKind::kL1;
  if (s == "l2") return MetricKind::kL2;
  if (s == "linf") return MetricKind::kLinf;
  if (s == "madl1") return MetricKind::kMadL1;
  throw ParameterError("unknown metric '" + std::string(s) + "' (expected l0, l1, l2, linf, madl1)");
}

/// Distance selector. `tolerance` only matters for L0, `weights` only for
/// MadL1.
class MetricSpec {
 public:
  static MetricSpec l0(double tolerance = kDefaultL0Tolerance) {
    if (!(tolerance >= 0.0) || !std::isfinite(tolerance)) {
      throw ParameterError("L0 tolerance must be finite and >= 0");
    }
    MetricSpec m(MetricKind::kL0);
    m.tolerance_ = tolerance;
    return m;
  }
  static MetricSpec l1() { return MetricSpec(MetricKind::kL1); }
  static MetricSpec l2() { return MetricSpec(MetricKind::kL2); }
  static MetricSpec linf() { return MetricSpec(MetricKind::kLinf); }
  static MetricSpec mad_l1(std::vector<double> weights) {
    if (weights.empty()) throw ParameterError("MadL1 needs at least one weight");
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw ParameterError("MadL1 weights must be positive and finite");
    }
    MetricSpec m(MetricKind::kMadL1);
    m.weights_ = std::move(weights);
    return m;
  }

  MetricKind kind() const noexcept { return kind_; }
  double tolerance() const noexcept { return tolerance_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Per-coordinate scale of one "unit" of distance: 1/weight for MadL1,
  /// 1 otherwise. Searches step in these units.
  double coordinate_scale(std::size_t j) const {
    return kind_ == MetricKind::kMadL1 ? 1.0 / weights_.at(j) : 1.0;
  }

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;

 private:
  explicit MetricSpec(MetricKind k) : kind_(k) {}
  MetricKind kind_ = MetricKind::kL2;
  double tolerance_ = kDefaultL0Tolerance;
  std::vector<double> weights_;
};

/// Median; even-length lists take the mean of the two central values.
inline double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

inline double median_absolute_deviation(const std::vector<double>& values) {
  const double m = median(values);
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - m));
  return median(std::move(dev));
}

struct MadWeights {
  std::vector<double> mad;       // raw MAD per column
  std::vector<double> fallback;  // epsilon_j per column
  std::vector<double> weights;   // 1 / max(mad_j, epsilon_j)
  std::string provenance;

  MetricSpec metric() const { return MetricSpec::mad_l1(weights); }
};

/// Inverse-MAD feature weights. A column whose MAD is below
/// eps_j = 1e-4 * max(range_j, 1e-12) is weighted 1/eps_j instead.
inline MadWeights compute_mad(const Dataset& data, std::string provenance = {}) {
  if (data.empty()) throw DataError("cannot compute MAD of an empty dataset");
  MadWeights out;
  out.provenance = std::move(provenance);
  for (std::size_t j = 0; j < data.width(); ++j) {
    const auto col = data.column(j);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    const double eps = 1e-4 * std::max(*hi - *lo, 1e-12);
    const double mad = median_absolute_deviation(col);
    out.mad.push_back(mad);
    out.fallback.push_back(eps);
    out.weights.push_back(1.0 / std::max(mad, eps));
  }
  return out;
}

inline double distance(const MetricSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("distance: lengths " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()) + " differ");
  }
  if (spec.kind() == MetricKind::kMadL1 && spec.weights().size() != x.size()) {
    throw ShapeError("distance: MadL1 has " + std::to_string(spec.weights().size()) +
                     " weights for vectors of length " + std::to_string(x.size()));
  }
  double acc = 0.0;
  switch (spec.kind()) {
    case MetricKind::kL0:
      for (std::size_t j = 0; j < x.size(); ++j) acc += std::abs(x[j] - y[j]) > spec.tolerance() ? 1.0 : 0.0;
      return acc;
    case MetricKind::kL1:
      for (std::size_t j = 0; j < x.size(); ++j) acc += std::abs(x[j] - y[j]);
      return acc;
    case MetricKind::kL2:
      for (std::size_t j = 0; j < x.size(); ++j) acc += (x[j] - y[j]) * (x[j] - y[j]);
      return std::sqrt(acc);
    case MetricKind::kLinf:
      for (std::size_t j = 0; j < x.size(); ++j) acc = std::max(acc, std::abs(x[j] - y[j]));
      return acc;
    case MetricKind::kMadL1:
      for (std::size_t j = 0; j < x.size(); ++j) acc += spec.weights()[j] * std::abs(x[j] - y[j]);
      return acc;
  }
  return acc;
}

inline double distance(const MetricSpec& spec, const Vector& x, const Vector& y) {
  return distance(spec, x.values(), y.values());
}

inline std::size_t count_changed(std::span<const double> x, std::span<const double> y,
                                 double tolerance = kDefaultL0Tolerance) {
  return static_cast<std::size_t>(distance(MetricSpec::l0(tolerance), x, y));
}

/// Subgradient of d(anchor, x) with respect to x. L1/MadL1 use sign with 0
/// at ties; L2 is 0 at x = anchor; Linf picks the first maximizing
/// coordinate; L0 is treated as flat.
inline std::vector<double> distance_gradient(const MetricSpec& spec, std::span<const double> anchor,
                                             std::span<const double> x) {
  if (anchor.size() != x.size()) throw ShapeError("distance_gradient: length mismatch");
  std::vector<double> g(x.size(), 0.0);
  auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  switch (spec.kind()) {
    case MetricKind::kL0:
      break;
    case MetricKind::kL1:
      for (std::size_t j = 0; j < x.size(); ++j) g[j] = sign(x[j] - anchor[j]);
      break;
    case MetricKind::kMadL1:
      for (std::size_t j = 0; j < x.size(); ++j) g[j] = spec.weights().at(j) * sign(x[j] - anchor[j]);
      break;
    case MetricKind::kL2: {
      const double d = distance(spec, anchor, x);
      if (d > 0.0) {
        for (std::size_t j = 0; j < x.size(); ++j) g[j] = (x[j] - anchor[j]) / d;
      }
      break;
    }
    case MetricKind::kLinf: {
      std::size_t best = 0;
      double peak = -1.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double a = std::abs(x[j] - anchor[j]);
        if (a > peak) {
          peak = a;
          best = j;
        }
      }
      if (peak > 0.0) g[best] = sign(x[best] - anchor[best]);
      break;
    }
  }
  return g;
}

}  // namespace cfx
