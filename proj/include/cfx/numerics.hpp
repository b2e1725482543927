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
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfx/errors.hpp"

namespace cfx {

/// Dense vector of finite doubles with a fixed, positive length.
class Vector {
 public:
  Vector() = default;

  explicit Vector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ShapeError("vector must have positive length");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw DataError("non-finite value at index " + std::to_string(i));
      }
    }
  }

  Vector(std::initializer_list<double> values)
      : Vector(std::vector<double>(values)) {}

  static Vector zeros(std::size_t n) { return Vector(std::vector<double>(n, 0.0)); }

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(std::size_t i) const {
    if (i >= values_.size()) throw IndexError("vector index out of range");
    return values_[i];
  }

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& raw() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  /// Copy with coordinate `i` replaced.
  Vector with(std::size_t i, double v) const {
    std::vector<double> copy = values_;
    copy.at(i) = v;
    return Vector(std::move(copy));
  }

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> values_;
};

/// Row-major dense matrix of finite doubles.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows_ == 0 || cols_ == 0) throw ShapeError("matrix dimensions must be positive");
    if (values_.size() != rows_ * cols_) {
      throw ShapeError("matrix expects " + std::to_string(rows_ * cols_) +
                       " values, got " + std::to_string(values_.size()));
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw DataError("non-finite matrix entry");
    }
  }

  static Matrix zeros(std::size_t rows, std::size_t cols) {
    return Matrix(rows, cols, std::vector<double>(rows * cols, 0.0));
  }

  static Matrix identity(std::size_t n) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    return Matrix(n, n, std::move(v));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& raw() const noexcept { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

enum class Activation { kIdentity, kRelu, kSigmoid, kSoftmax };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftmax: return "softmax";
  }
  return "identity";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "softmax") return Activation::kSoftmax;
  throw ParseError("unknown activation '" + std::string(name) + "'");
}

namespace detail {

// Raw-buffer kernels shared by the Vector-level API and the allocation-light
// evaluators in model.hpp. Summation is strictly left to right over columns.

inline void affine(const Matrix& w, std::span<const double> b,
                   std::span<const double> x, std::vector<double>& out) {
  out.resize(w.rows());
  const double* data = w.values().data();
  const std::size_t cols = w.cols();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double acc = 0.0;
    const double* row = data + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc + b[r];
  }
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void activate(Activation kind, std::span<const double> z, std::vector<double>& out) {
  out.resize(z.size());
  switch (kind) {
    case Activation::kIdentity:
      std::copy(z.begin(), z.end(), out.begin());
      break;
    case Activation::kRelu:
      for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < z.size(); ++i) out[i] = sigmoid(z[i]);
      break;
    case Activation::kSoftmax: {
      double peak = z[0];
      for (double v : z) peak = std::max(peak, v);
      double total = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - peak);
        total += out[i];
      }
      for (double& v : out) v /= total;
      break;
    }
  }
}

/// Vector-Jacobian product of the activation: given z, a = act(z) and
/// upstream dL/da, writes dL/dz. relu'(0) is 0.
inline void activate_backward(Activation kind, std::span<const double> z,
                              std::span<const double> a, std::span<const double> upstream,
                              std::vector<double>& out) {
  out.resize(z.size());
  switch (kind) {
    case Activation::kIdentity:
      std::copy(upstream.begin(), upstream.end(), out.begin());
      break;
    case Activation::kRelu:
      for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] > 0.0 ? upstream[i] : 0.0;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < z.size(); ++i) out[i] = upstream[i] * a[i] * (1.0 - a[i]);
      break;
    case Activation::kSoftmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) dot += a[i] * upstream[i];
      for (std::size_t i = 0; i < z.size(); ++i) out[i] = a[i] * (upstream[i] - dot);
      break;
    }
  }
}

}  // namespace detail

/// Wx + b.
inline Vector affine_forward(const Matrix& w, const Vector& b, const Vector& x) {
  if (w.cols() != x.size()) {
    throw ShapeError("affine: W has " + std::to_string(w.cols()) + " columns but x has length " +
                     std::to_string(x.size()));
  }
  if (b.size() != w.rows()) {
    throw ShapeError("affine: W has " + std::to_string(w.rows()) + " rows but b has length " +
                     std::to_string(b.size()));
  }
  std::vector<double> out;
  detail::affine(w, b.values(), x.values(), out);
  return Vector(std::move(out));
}

inline Vector activation_forward(Activation kind, std::span<const double> z) {
  if (z.empty()) throw ShapeError("activation of an empty vector");
  std::vector<double> out;
  detail::activate(kind, z, out);
  return Vector(std::move(out));
}

inline Vector activation_forward(Activation kind, const Vector& z) {
  return activation_forward(kind, z.values());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double l2_norm(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

}  // namespace cfx
