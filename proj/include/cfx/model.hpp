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
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfx/errors.hpp"
#include "cfx/numerics.hpp"
#include "cfx/random.hpp"
#include "cfx/text.hpp"

namespace cfx {

struct LayerSpec {
  Matrix weights;
  Vector bias;
  Activation activation = Activation::kIdentity;

  std::size_t input_width() const noexcept { return weights.cols(); }
  std::size_t output_width() const noexcept { return weights.rows(); }
};

/// An ordered stack of layers with no constraint on the final activation.
/// `split_at_layer` returns one of these as the head.
class LayerStack {
 public:
  LayerStack() = default;
  explicit LayerStack(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("layer stack must not be empty");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.bias.size() != l.weights.rows()) {
        throw ShapeError("layer " + std::to_string(i) + ": bias length " +
                         std::to_string(l.bias.size()) + " does not match rows " +
                         std::to_string(l.weights.rows()));
      }
      if (i > 0 && layers_[i - 1].output_width() != l.input_width()) {
        throw ShapeError("layer " + std::to_string(i) + ": expects " +
                         std::to_string(l.input_width()) + " inputs but layer " +
                         std::to_string(i - 1) + " produces " +
                         std::to_string(layers_[i - 1].output_width()));
      }
    }
  }

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::size_t input_width() const noexcept { return layers_.front().input_width(); }
  std::size_t output_width() const noexcept { return layers_.back().output_width(); }

  Vector apply(const Vector& x) const {
    if (x.size() != input_width()) {
      throw ShapeError("input has length " + std::to_string(x.size()) + ", expected " +
                       std::to_string(input_width()));
    }
    std::vector<double> cur(x.begin(), x.end()), z;
    for (const auto& l : layers_) {
      detail::affine(l.weights, l.bias.values(), cur, z);
      detail::activate(l.activation, z, cur);
    }
    return Vector(std::move(cur));
  }

 private:
  std::vector<LayerSpec> layers_;
};

/// Feedforward classifier. The output layer is either softmax over >= 2
/// classes or a single sigmoid unit giving P(class 1) for a binary model.
class Network {
 public:
  Network() = default;

  Network(std::vector<LayerSpec> layers, std::vector<std::string> class_labels,
          std::vector<std::string> feature_names = {})
      : stack_(std::move(layers)),
        class_labels_(std::move(class_labels)),
        feature_names_(std::move(feature_names)) {
    const auto& last = stack_.layers().back();
    if (last.activation == Activation::kSigmoid) {
      if (last.output_width() != 1) {
        throw ShapeError("sigmoid output layer must have width 1, got " +
                         std::to_string(last.output_width()));
      }
    } else if (last.activation == Activation::kSoftmax) {
      if (last.output_width() < 2) throw ShapeError("softmax output layer needs at least 2 units");
    } else {
      throw ShapeError("output layer must be softmax or sigmoid, got " +
                       std::string(to_string(last.activation)));
    }
    if (class_labels_.size() != class_count()) {
      throw ShapeError("expected " + std::to_string(class_count()) + " class labels, got " +
                       std::to_string(class_labels_.size()));
    }
    if (!feature_names_.empty() && feature_names_.size() != input_width()) {
      throw ShapeError("expected " + std::to_string(input_width()) + " feature names, got " +
                       std::to_string(feature_names_.size()));
    }
  }

  const std::vector<LayerSpec>& layers() const noexcept { return stack_.layers(); }
  const LayerStack& stack() const noexcept { return stack_; }
  std::size_t layer_count() const noexcept { return stack_.layers().size(); }
  std::size_t input_width() const noexcept { return stack_.input_width(); }
  bool is_binary() const noexcept {
    return stack_.layers().back().activation == Activation::kSigmoid;
  }
  std::size_t class_count() const noexcept {
    return is_binary() ? 2 : stack_.output_width();
  }
  const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

  const std::string& label(std::size_t cls) const {
    if (cls >= class_labels_.size()) {
      throw IndexError("class " + std::to_string(cls) + " out of range (" +
                       std::to_string(class_labels_.size()) + " classes)");
    }
    return class_labels_[cls];
  }

  std::size_t class_index(const std::string& label) const {
    for (std::size_t i = 0; i < class_labels_.size(); ++i) {
      if (class_labels_[i] == label) return i;
    }
    throw IndexError("unknown class label '" + label + "'");
  }

  friend bool operator==(const Network& a, const Network& b) {
    if (a.class_labels_ != b.class_labels_ || a.feature_names_ != b.feature_names_) return false;
    if (a.layers().size() != b.layers().size()) return false;
    for (std::size_t i = 0; i < a.layers().size(); ++i) {
      const auto& la = a.layers()[i];
      const auto& lb = b.layers()[i];
      if (!(la.weights == lb.weights) || !(la.bias == lb.bias) || la.activation != lb.activation) {
        return false;
      }
    }
    return true;
  }

 private:
  LayerStack stack_;
  std::vector<std::string> class_labels_;
  std::vector<std::string> feature_names_;
};

struct ForwardTrace {
  std::vector<std::vector<double>> pre_activations;
  std::vector<std::vector<double>> activations;  // post-activation, one per layer
  std::vector<double> logits;                    // final pre-activation
  std::vector<double> probabilities;             // one per class
};

namespace detail {

inline void check_input(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_width()) {
    throw ShapeError("input has length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(net.input_width()));
  }
}

inline void output_probabilities(const Network& net, std::span<const double> out,
                                 std::vector<double>& probs) {
  if (net.is_binary()) {
    probs.assign({1.0 - out[0], out[0]});
  } else {
    probs.assign(out.begin(), out.end());
  }
}

/// Class decision from class probabilities: binary picks 1 iff p1 >= 0.5,
/// otherwise argmax with lowest-index tie-break.
inline std::size_t decide(bool binary, std::span<const double> probs) {
  if (binary) return probs[1] >= 0.5 ? 1 : 0;
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

}  // namespace detail

inline ForwardTrace forward(const Network& net, std::span<const double> x) {
  detail::check_input(net, x);
  ForwardTrace t;
  std::vector<double> cur(x.begin(), x.end()), z;
  for (const auto& l : net.layers()) {
    detail::affine(l.weights, l.bias.values(), cur, z);
    detail::activate(l.activation, z, cur);
    t.pre_activations.push_back(z);
    t.activations.push_back(cur);
  }
  t.logits = t.pre_activations.back();
  detail::output_probabilities(net, t.activations.back(), t.probabilities);
  return t;
}

inline ForwardTrace forward(const Network& net, const Vector& x) { return forward(net, x.values()); }

/// Reusable buffers for repeated probability evaluation (grid searches,
/// differential evolution) without per-call trace allocation.
class Evaluator {
 public:
  explicit Evaluator(const Network& net) : net_(&net) {}

  std::span<const double> probabilities(std::span<const double> x) {
    detail::check_input(*net_, x);
    cur_.assign(x.begin(), x.end());
    for (const auto& l : net_->layers()) {
      detail::affine(l.weights, l.bias.values(), cur_, z_);
      detail::activate(l.activation, z_, cur_);
    }
    detail::output_probabilities(*net_, cur_, probs_);
    return probs_;
  }

  std::size_t predict(std::span<const double> x) {
    return detail::decide(net_->is_binary(), probabilities(x));
  }

 private:
  const Network* net_;
  std::vector<double> cur_, z_, probs_;
};

struct Prediction {
  std::size_t index = 0;
  std::string label;
};

inline std::size_t predict_index(const Network& net, std::span<const double> x) {
  const auto t = forward(net, x);
  return detail::decide(net.is_binary(), t.probabilities);
}

inline Prediction predict(const Network& net, const Vector& x) {
  const std::size_t i = predict_index(net, x.values());
  return {i, net.label(i)};
}

/// Splits after layer `layer`: head maps inputs to that layer's activations
/// and tail maps those activations to class probabilities.
inline std::pair<LayerStack, Network> split_at_layer(const Network& net, std::size_t layer) {
  if (net.layer_count() < 2 || layer > net.layer_count() - 2) {
    throw IndexError("split layer " + std::to_string(layer) + " out of range; network has " +
                     std::to_string(net.layer_count()) + " layers");
  }
  const auto& all = net.layers();
  std::vector<LayerSpec> head(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(layer) + 1);
  std::vector<LayerSpec> tail(all.begin() + static_cast<std::ptrdiff_t>(layer) + 1, all.end());
  return {LayerStack(std::move(head)), Network(std::move(tail), net.class_labels())};
}

// ---------------------------------------------------------------------------
// Datasets

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Vector> rows, std::vector<std::size_t> labels,
          std::vector<std::string> feature_names = {})
      : rows_(std::move(rows)), labels_(std::move(labels)), feature_names_(std::move(feature_names)) {
    if (rows_.size() != labels_.size()) {
      throw DataError("dataset has " + std::to_string(rows_.size()) + " rows but " +
                      std::to_string(labels_.size()) + " labels");
    }
    for (std::size_t i = 1; i < rows_.size(); ++i) {
      if (rows_[i].size() != rows_[0].size()) {
        throw ShapeError("dataset row " + std::to_string(i) + " has length " +
                         std::to_string(rows_[i].size()) + ", expected " +
                         std::to_string(rows_[0].size()));
      }
    }
    if (!feature_names_.empty() && !rows_.empty() && feature_names_.size() != rows_[0].size()) {
      throw ShapeError("feature name count does not match row width");
    }
  }

  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  std::size_t width() const noexcept { return rows_.empty() ? 0 : rows_[0].size(); }
  const std::vector<Vector>& rows() const noexcept { return rows_; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const Vector& row(std::size_t i) const { return rows_.at(i); }

  /// Throws DataError if any label is >= `classes`.
  void check_labels(std::size_t classes) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] >= classes) {
        throw DataError("row " + std::to_string(i) + " has label " + std::to_string(labels_[i]) +
                        " but the model has " + std::to_string(classes) + " classes");
      }
    }
  }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r.at(j));
    return out;
  }

 private:
  std::vector<Vector> rows_;
  std::vector<std::size_t> labels_;
  std::vector<std::string> feature_names_;
};

// ---------------------------------------------------------------------------
// Construction and training

/// Xavier-uniform weights, zero biases. `hidden` lists hidden-layer widths;
/// the output is a sigmoid unit when there are two labels and
/// `binary_sigmoid` is set, softmax otherwise.
inline Network random_network(std::size_t input_width, const std::vector<std::size_t>& hidden,
                              Activation hidden_activation, std::vector<std::string> class_labels,
                              std::uint64_t seed, bool binary_sigmoid = true,
                              std::vector<std::string> feature_names = {}) {
  Rng rng(seed);
  std::vector<std::size_t> widths{input_width};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  const bool sigmoid_out = binary_sigmoid && class_labels.size() == 2;
  widths.push_back(sigmoid_out ? 1 : class_labels.size());
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t fan_in = widths[i], fan_out = widths[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = rng.uniform(-limit, limit);
    const bool last = i + 2 == widths.size();
    layers.push_back({Matrix(fan_out, fan_in, std::move(w)), Vector::zeros(fan_out),
                      last ? (sigmoid_out ? Activation::kSigmoid : Activation::kSoftmax)
                           : hidden_activation});
  }
  return Network(std::move(layers), std::move(class_labels), std::move(feature_names));
}

struct TrainOptions {
  std::size_t epochs = 200;
  double step_size = 0.1;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  std::size_t batch_size = 16;
};

struct TrainReport {
  Network network;
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;  // mean minibatch loss seen during each epoch
};

inline double sample_cross_entropy(const Network& net, std::span<const double> x, std::size_t label) {
  const auto t = forward(net, x);
  return -std::log(std::max(t.probabilities[label], 1e-300));
}

inline double mean_cross_entropy(const Network& net, const Dataset& data) {
  if (data.empty()) throw DataError("empty dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += sample_cross_entropy(net, data.row(i).values(), data.labels()[i]);
  }
  return total / static_cast<double>(data.size());
}

/// Mini-batch gradient descent with momentum on cross-entropy.
inline TrainReport train_with_history(const Network& net, const Dataset& data,
                                      const TrainOptions& opt) {
  if (data.empty()) throw DataError("cannot train on an empty dataset");
  if (!(opt.step_size > 0.0)) throw ParameterError("step size must be positive");
  if (opt.momentum < 0.0 || opt.momentum >= 1.0) throw ParameterError("momentum must be in [0,1)");
  if (opt.batch_size == 0) throw ParameterError("batch size must be positive");
  if (data.width() != net.input_width()) {
    throw ShapeError("dataset width " + std::to_string(data.width()) + " does not match model input " +
                     std::to_string(net.input_width()));
  }
  data.check_labels(net.class_count());

  TrainReport report{net, mean_cross_entropy(net, data), {}};
  if (opt.epochs == 0) return report;

  const auto& src = net.layers();
  const std::size_t nl = src.size();
  std::vector<std::vector<double>> w(nl), b(nl), vw(nl), vb(nl), gw(nl), gb(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    w[l] = src[l].weights.raw();
    b[l] = src[l].bias.raw();
    vw[l].assign(w[l].size(), 0.0);
    vb[l].assign(b[l].size(), 0.0);
  }
  auto snapshot = [&] {
    std::vector<LayerSpec> layers;
    for (std::size_t l = 0; l < nl; ++l) {
      layers.push_back({Matrix(src[l].weights.rows(), src[l].weights.cols(), w[l]), Vector(b[l]),
                        src[l].activation});
    }
    return Network(std::move(layers), net.class_labels(), net.feature_names());
  };

  Rng rng(opt.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<std::vector<double>> z(nl), a(nl);
  std::vector<double> delta, upstream;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t stop = std::min(order.size(), start + opt.batch_size);
      for (std::size_t l = 0; l < nl; ++l) {
        gw[l].assign(w[l].size(), 0.0);
        gb[l].assign(b[l].size(), 0.0);
      }
      for (std::size_t k = start; k < stop; ++k) {
        const auto& x = data.row(order[k]).raw();
        const std::size_t y = data.labels()[order[k]];
        // forward on the live weights
        const std::vector<double>* in = &x;
        for (std::size_t l = 0; l < nl; ++l) {
          const std::size_t rows = src[l].weights.rows(), cols = src[l].weights.cols();
          z[l].assign(rows, 0.0);
          for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < cols; ++c) acc += w[l][r * cols + c] * (*in)[c];
            z[l][r] = acc + b[l][r];
          }
          detail::activate(src[l].activation, z[l], a[l]);
          in = &a[l];
        }
        // d(cross-entropy)/d(final pre-activation)
        if (net.is_binary()) {
          const double p = a[nl - 1][0];
          epoch_loss += -std::log(std::max(y == 1 ? p : 1.0 - p, 1e-300));
          delta.assign({p - static_cast<double>(y)});
        } else {
          epoch_loss += -std::log(std::max(a[nl - 1][y], 1e-300));
          delta = a[nl - 1];
          delta[y] -= 1.0;
        }
        for (std::size_t l = nl; l-- > 0;) {
          const std::size_t rows = src[l].weights.rows(), cols = src[l].weights.cols();
          const std::vector<double>& input = l == 0 ? x : a[l - 1];
          for (std::size_t r = 0; r < rows; ++r) {
            gb[l][r] += delta[r];
            for (std::size_t c = 0; c < cols; ++c) gw[l][r * cols + c] += delta[r] * input[c];
          }
          if (l == 0) break;
          upstream.assign(cols, 0.0);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) upstream[c] += w[l][r * cols + c] * delta[r];
          }
          detail::activate_backward(src[l - 1].activation, z[l - 1], a[l - 1], upstream, delta);
        }
      }
      const double scale = opt.step_size / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t i = 0; i < w[l].size(); ++i) {
          vw[l][i] = opt.momentum * vw[l][i] - scale * gw[l][i];
          w[l][i] += vw[l][i];
        }
        for (std::size_t i = 0; i < b[l].size(); ++i) {
          vb[l][i] = opt.momentum * vb[l][i] - scale * gb[l][i];
          b[l][i] += vb[l][i];
        }
      }
    }
    report.epoch_losses.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  report.network = snapshot();
  return report;
}

inline Network train(const Network& net, const Dataset& data, const TrainOptions& opt) {
  return train_with_history(net, data, opt).network;
}

inline double accuracy(const Network& net, const Dataset& data) {
  if (data.empty()) throw DataError("empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict_index(net, data.row(i).values()) == data.labels()[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

/// Folds a per-feature standardization (x - mean) / scale into the first
/// layer so the returned network consumes raw features.
inline Network fold_input_scaling(const Network& net, std::span<const double> mean,
                                  std::span<const double> scale) {
  auto layers = net.layers();
  auto& first = layers.front();
  const std::size_t rows = first.weights.rows(), cols = first.weights.cols();
  if (mean.size() != cols || scale.size() != cols) throw ShapeError("scaling width mismatch");
  std::vector<double> w = first.weights.raw();
  std::vector<double> bias = first.bias.raw();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      w[r * cols + c] /= scale[c];
      bias[r] -= w[r * cols + c] * mean[c];
    }
  }
  first.weights = Matrix(rows, cols, std::move(w));
  first.bias = Vector(std::move(bias));
  return Network(std::move(layers), net.class_labels(), net.feature_names());
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline void write_number_array(std::ostream& os, std::span<const double> values) {
  os << '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ", ";
    os << text::exact(values[i]);
  }
  os << ']';
}

inline void write_string_array(std::ostream& os, const std::vector<std::string>& values) {
  os << '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ", ";
    os << nlohmann::json(values[i]).dump();
  }
  os << ']';
}

template <typename T>
T require_field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": field '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

}  // namespace detail

/// Model JSON with every number written to 17 significant digits.
inline std::string model_to_json(const Network& net) {
  std::ostringstream os;
  os << "{\n  \"input_width\": " << net.input_width() << ",\n  \"class_labels\": ";
  detail::write_string_array(os, net.class_labels());
  if (!net.feature_names().empty()) {
    os << ",\n  \"feature_names\": ";
    detail::write_string_array(os, net.feature_names());
  }
  os << ",\n  \"layers\": [";
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& layer = net.layers()[l];
    os << (l ? ",\n" : "\n") << "    {\"activation\": \"" << to_string(layer.activation)
       << "\", \"rows\": " << layer.weights.rows() << ", \"cols\": " << layer.weights.cols()
       << ",\n     \"weights\": ";
    detail::write_number_array(os, layer.weights.values());
    os << ",\n     \"bias\": ";
    detail::write_number_array(os, layer.bias.values());
    os << '}';
  }
  os << "\n  ]\n}\n";
  return os.str();
}

inline Network model_from_json(const std::string& content) {
  if (text::trim(content).empty()) throw ParseError("model file is empty");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  const auto input_width = detail::require_field<std::size_t>(j, "input_width", "model");
  auto labels = detail::require_field<std::vector<std::string>>(j, "class_labels", "model");
  std::vector<std::string> names;
  if (j.contains("feature_names")) {
    names = detail::require_field<std::vector<std::string>>(j, "feature_names", "model");
  }
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty()) {
    throw ParseError("model: 'layers' must be a nonempty array");
  }
  std::vector<LayerSpec> layers;
  std::size_t expected_cols = input_width;
  for (std::size_t l = 0; l < j["layers"].size(); ++l) {
    const auto& jl = j["layers"][l];
    const std::string where = "layer " + std::to_string(l);
    const auto act = detail::require_field<std::string>(jl, "activation", where);
    const auto rows = detail::require_field<std::size_t>(jl, "rows", where);
    const auto cols = detail::require_field<std::size_t>(jl, "cols", where);
    auto weights = detail::require_field<std::vector<double>>(jl, "weights", where);
    auto bias = detail::require_field<std::vector<double>>(jl, "bias", where);
    if (cols != expected_cols) {
      throw ParseError(where + ": cols " + std::to_string(cols) + " does not match incoming width " +
                       std::to_string(expected_cols));
    }
    if (weights.size() != rows * cols) {
      throw ParseError(where + ": weights has " + std::to_string(weights.size()) +
                       " values, expected rows*cols = " + std::to_string(rows * cols));
    }
    if (bias.size() != rows) {
      throw ParseError(where + ": bias length " + std::to_string(bias.size()) +
                       " does not match rows " + std::to_string(rows));
    }
    try {
      layers.push_back({Matrix(rows, cols, std::move(weights)), Vector(std::move(bias)),
                        parse_activation(act)});
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(where + ": " + e.what());
    }
    expected_cols = rows;
  }
  try {
    return Network(std::move(layers), std::move(labels), std::move(names));
  } catch (const Error& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline void save_model(const Network& net, const std::string& path) {
  write_file(path, model_to_json(net));
}

inline Network load_model(const std::string& path) { return model_from_json(read_file(path)); }

}  // namespace cfx
