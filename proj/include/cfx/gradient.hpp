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
#include <string>
#include <variant>
#include <vector>

#include "cfx/errors.hpp"
#include "cfx/metrics.hpp"
#include "cfx/model.hpp"
#include "cfx/numerics.hpp"

namespace cfx {

namespace objective {

struct ClassProbability {
  std::size_t target_class = 0;
};

struct UnitActivation {
  std::size_t layer = 0;
  std::size_t unit = 0;
};

/// Dot product of a layer's activation vector with a unit-norm direction.
struct DirectionActivation {
  std::size_t layer = 0;
  Vector direction;
};

/// lambda * (p_target(x) - target_probability)^2 + d(anchor, x).
struct Penalty {
  std::size_t target_class = 0;
  double target_probability = 0.5;
  double lambda = 1.0;
  MetricSpec metric = MetricSpec::l2();
  Vector anchor;
};

}  // namespace objective

using ScalarObjective = std::variant<objective::ClassProbability, objective::UnitActivation,
                                     objective::DirectionActivation, objective::Penalty>;

inline constexpr double kUnitNormTolerance = 1e-9;

inline void validate_objective(const Network& net, const ScalarObjective& obj) {
  auto check_layer = [&](std::size_t layer) {
    if (layer >= net.layer_count()) {
      throw IndexError("layer " + std::to_string(layer) + " out of range (" +
                       std::to_string(net.layer_count()) + " layers)");
    }
    return net.layers()[layer].output_width();
  };
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, objective::ClassProbability>) {
          if (o.target_class >= net.class_count()) {
            throw IndexError("class " + std::to_string(o.target_class) + " out of range");
          }
        } else if constexpr (std::is_same_v<T, objective::UnitActivation>) {
          if (o.unit >= check_layer(o.layer)) {
            throw IndexError("unit " + std::to_string(o.unit) + " out of range for layer " +
                             std::to_string(o.layer));
          }
        } else if constexpr (std::is_same_v<T, objective::DirectionActivation>) {
          const std::size_t width = check_layer(o.layer);
          if (o.direction.size() != width) {
            throw ShapeError("direction has length " + std::to_string(o.direction.size()) +
                             ", layer " + std::to_string(o.layer) + " has width " +
                             std::to_string(width));
          }
          if (std::abs(l2_norm(o.direction.values()) - 1.0) > kUnitNormTolerance) {
            throw ParameterError("direction must have unit Euclidean norm");
          }
        } else {
          if (o.target_class >= net.class_count()) {
            throw IndexError("class " + std::to_string(o.target_class) + " out of range");
          }
          if (o.anchor.size() != net.input_width()) throw ShapeError("penalty anchor width mismatch");
        }
      },
      obj);
}

inline double evaluate_objective(const Network& net, std::span<const double> x,
                                 const ScalarObjective& obj) {
  const auto t = forward(net, x);
  return std::visit(
      [&](const auto& o) -> double {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, objective::ClassProbability>) {
          return t.probabilities.at(o.target_class);
        } else if constexpr (std::is_same_v<T, objective::UnitActivation>) {
          return t.activations.at(o.layer).at(o.unit);
        } else if constexpr (std::is_same_v<T, objective::DirectionActivation>) {
          return dot(t.activations.at(o.layer), o.direction.values());
        } else {
          const double gap = t.probabilities.at(o.target_class) - o.target_probability;
          return o.lambda * gap * gap + distance(o.metric, o.anchor.values(), x);
        }
      },
      obj);
}

namespace detail {

/// Backpropagates `upstream` = dObj/d(activation of layer `from`) down to
/// the network input.
inline std::vector<double> backprop_to_input(const Network& net, const ForwardTrace& t,
                                             std::size_t from, std::vector<double> upstream) {
  std::vector<double> delta;
  for (std::size_t l = from + 1; l-- > 0;) {
    const auto& layer = net.layers()[l];
    activate_backward(layer.activation, t.pre_activations[l], t.activations[l], upstream, delta);
    const std::size_t rows = layer.weights.rows(), cols = layer.weights.cols();
    upstream.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = layer.weights.row(r);
      for (std::size_t c = 0; c < cols; ++c) upstream[c] += row[c] * delta[r];
    }
  }
  return upstream;
}

inline std::vector<double> class_probability_gradient(const Network& net, const ForwardTrace& t,
                                                      std::size_t cls) {
  const std::size_t last = net.layer_count() - 1;
  std::vector<double> upstream(net.layers()[last].output_width(), 0.0);
  if (net.is_binary()) {
    upstream[0] = cls == 1 ? 1.0 : -1.0;
  } else {
    upstream[cls] = 1.0;
  }
  return backprop_to_input(net, t, last, std::move(upstream));
}

}  // namespace detail

/// Exact reverse-mode gradient of `obj` with respect to the input.
inline std::vector<double> grad_wrt_input(const Network& net, std::span<const double> x,
                                          const ScalarObjective& obj) {
  validate_objective(net, obj);
  const auto t = forward(net, x);
  return std::visit(
      [&](const auto& o) -> std::vector<double> {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, objective::ClassProbability>) {
          return detail::class_probability_gradient(net, t, o.target_class);
        } else if constexpr (std::is_same_v<T, objective::UnitActivation>) {
          std::vector<double> up(net.layers()[o.layer].output_width(), 0.0);
          up[o.unit] = 1.0;
          return detail::backprop_to_input(net, t, o.layer, std::move(up));
        } else if constexpr (std::is_same_v<T, objective::DirectionActivation>) {
          return detail::backprop_to_input(net, t, o.layer, o.direction.raw());
        } else {
          auto g = detail::class_probability_gradient(net, t, o.target_class);
          const double scale =
              2.0 * o.lambda * (t.probabilities[o.target_class] - o.target_probability);
          const auto gd = distance_gradient(o.metric, o.anchor.values(), x);
          for (std::size_t j = 0; j < g.size(); ++j) g[j] = scale * g[j] + gd[j];
          return g;
        }
      },
      obj);
}

inline Vector grad_wrt_input(const Network& net, const Vector& x, const ScalarObjective& obj) {
  return Vector(grad_wrt_input(net, x.values(), obj));
}

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
inline std::vector<double> finite_difference_gradient(const Network& net, std::span<const double> x,
                                                      const ScalarObjective& obj, double h = 1e-5) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("finite-difference step must be positive");
  validate_objective(net, obj);
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = evaluate_objective(net, probe, obj);
    probe[i] = x[i] - h;
    const double down = evaluate_objective(net, probe, obj);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline Vector finite_difference_gradient(const Network& net, const Vector& x,
                                         const ScalarObjective& obj, double h = 1e-5) {
  return Vector(finite_difference_gradient(net, x.values(), obj, h));
}

}  // namespace cfx
