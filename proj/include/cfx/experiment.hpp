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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfx/csv.hpp"
#include "cfx/errors.hpp"
#include "cfx/generator.hpp"
#include "cfx/metrics.hpp"
#include "cfx/model.hpp"
#include "cfx/report.hpp"
#include "cfx/semantics.hpp"

namespace cfx {

struct TabularArmConfig {
  std::string model;
  std::string data;
  std::string catalog;
  std::string label_column = "label";
  std::string metric = "madl1";
  std::optional<std::string> target;  // class label; none flips to the runner-up
  std::size_t samples = 3;
  std::size_t max_rows = 0;  // 0: all rows
  SearchConfig search;
};

struct PixelArmConfig {
  std::string model;
  std::string data;
  std::string label_column = "label";
  std::string metric = "l2";
  std::optional<std::string> target;
  bool one_pixel = false;
  std::size_t pixels = 1;
  DifferentialEvolution de;
  std::size_t image_rows = 8;
  std::size_t image_cols = 8;
  std::string channel = "intensity";
  std::vector<std::string> decisions;  // defaults to "classified as <label>"
  std::size_t samples = 1;
  std::size_t max_rows = 0;
  SearchConfig search;
};

struct ExperimentConfig {
  TabularArmConfig tabular;
  PixelArmConfig pixel;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  ordered_json echo;  // the config as read, for provenance
};

namespace detail {

inline void read_search_overrides(const ordered_json& j, SearchConfig& s) {
  if (!j.is_object()) return;
  if (j.contains("lambda0")) s.lambda.initial = j["lambda0"].get<double>();
  if (j.contains("lambda_multiplier")) s.lambda.multiplier = j["lambda_multiplier"].get<double>();
  if (j.contains("max_rounds")) s.lambda.max_rounds = j["max_rounds"].get<std::size_t>();
  if (j.contains("step_size")) s.inner.step_size = j["step_size"].get<double>();
  if (j.contains("momentum")) s.inner.momentum = j["momentum"].get<double>();
  if (j.contains("max_iterations")) s.inner.max_iterations = j["max_iterations"].get<std::size_t>();
  if (j.contains("refine_iterations")) s.inner.refine_iterations = j["refine_iterations"].get<std::size_t>();
  if (j.contains("target_probability")) s.target_probability = j["target_probability"].get<double>();
  if (j.contains("margin")) s.margin = j["margin"].get<double>();
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace detail

/// Reads an experiment JSON. Relative paths resolve against the file's
/// directory.
inline ExperimentConfig experiment_config_from_json(const ordered_json& j,
                                                    const std::filesystem::path& base = {}) {
  try {
    ExperimentConfig c;
    c.echo = j;
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = detail::resolve(base, j.value("output_dir", std::string{"out"}));
    const auto& t = j.at("tabular");
    c.tabular.model = detail::resolve(base, t.at("model").get<std::string>());
    c.tabular.data = detail::resolve(base, t.at("data").get<std::string>());
    c.tabular.catalog = detail::resolve(base, t.at("catalog").get<std::string>());
    c.tabular.label_column = t.value("label_column", c.tabular.label_column);
    c.tabular.metric = t.value("metric", c.tabular.metric);
    if (t.contains("target") && !t["target"].is_null()) c.tabular.target = t["target"].get<std::string>();
    c.tabular.samples = t.value("samples", c.tabular.samples);
    c.tabular.max_rows = t.value("max_rows", c.tabular.max_rows);
    if (t.contains("search")) detail::read_search_overrides(t["search"], c.tabular.search);

    const auto& p = j.at("pixel");
    c.pixel.model = detail::resolve(base, p.at("model").get<std::string>());
    c.pixel.data = detail::resolve(base, p.at("data").get<std::string>());
    c.pixel.label_column = p.value("label_column", c.pixel.label_column);
    c.pixel.metric = p.value("metric", c.pixel.metric);
    if (p.contains("target") && !p["target"].is_null()) c.pixel.target = p["target"].get<std::string>();
    c.pixel.one_pixel = p.value("one_pixel", false);
    c.pixel.pixels = p.value("pixels", c.pixel.pixels);
    c.pixel.image_rows = p.value("image_rows", c.pixel.image_rows);
    c.pixel.image_cols = p.value("image_cols", c.pixel.image_cols);
    c.pixel.channel = p.value("channel", c.pixel.channel);
    if (p.contains("decisions")) c.pixel.decisions = p["decisions"].get<std::vector<std::string>>();
    c.pixel.samples = p.value("samples", c.pixel.samples);
    c.pixel.max_rows = p.value("max_rows", c.pixel.max_rows);
    if (p.contains("search")) detail::read_search_overrides(p["search"], c.pixel.search);
    if (p.contains("de")) {
      const auto& d = p["de"];
      c.pixel.de.population = d.value("population", c.pixel.de.population);
      c.pixel.de.weight = d.value("weight", c.pixel.de.weight);
      c.pixel.de.crossover = d.value("crossover", c.pixel.de.crossover);
      c.pixel.de.generations = d.value("generations", c.pixel.de.generations);
    }
    c.tabular.search.seed = c.seed;
    c.pixel.search.seed = c.seed;
    c.pixel.de.seed = c.seed;
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  const auto content = read_file(path);
  ordered_json j;
  try {
    j = ordered_json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("experiment config '" + path + "': " + e.what());
  }
  return experiment_config_from_json(j, std::filesystem::path(path).parent_path());
}

/// Raised when one arm of the experiment fails; keeps the underlying exit
/// code.
class ArmError : public Error {
 public:
  ArmError(const std::string& arm, const Error& cause)
      : Error(arm + " arm: " + cause.what()), code_(cause.exit_code()) {}
  int exit_code() const noexcept override { return code_; }

 private:
  int code_;
};

namespace detail {

inline Dataset first_rows(const Dataset& d, std::size_t max_rows) {
  if (max_rows == 0 || d.size() <= max_rows) return d;
  std::vector<Vector> rows(d.rows().begin(), d.rows().begin() + static_cast<std::ptrdiff_t>(max_rows));
  std::vector<std::size_t> labels(d.labels().begin(),
                                  d.labels().begin() + static_cast<std::ptrdiff_t>(max_rows));
  return Dataset(std::move(rows), std::move(labels), d.feature_names());
}

inline MetricSpec arm_metric(const std::string& name, const Dataset& data, const std::string& provenance,
                             std::vector<double>& weights_out) {
  const auto kind = parse_metric_kind(name);
  switch (kind) {
    case MetricKind::kMadL1: {
      auto mad = compute_mad(data, provenance);
      weights_out = mad.weights;
      return mad.metric();
    }
    case MetricKind::kL0: return MetricSpec::l0();
    case MetricKind::kL1: return MetricSpec::l1();
    case MetricKind::kL2: return MetricSpec::l2();
    case MetricKind::kLinf: return MetricSpec::linf();
  }
  return MetricSpec::l2();
}

/// Plain-English samples from the first converged instances; one identity
/// sentence when nothing needed changing.
inline std::vector<Explanation> sample_explanations(const BatchStats& stats, const FeatureCatalog& cat,
                                                    std::size_t count,
                                                    std::optional<std::size_t> specific_target) {
  std::vector<Explanation> out;
  for (const auto& inst : stats.instances) {
    if (out.size() >= count) break;
    if (!inst.result.converged()) continue;
    const auto diff = feature_diff(inst.input.values(), inst.result.counterfactual.values(), cat);
    out.push_back(render_counterfactual(diff, cat, inst.original_class, inst.result.achieved_class,
                                        ExplanationStyle::kPlainEnglish));
  }
  if (out.empty() && stats.attempted == 0 && stats.skipped > 0 && specific_target && count > 0) {
    out.push_back(render_counterfactual({}, cat, *specific_target, *specific_target,
                                        ExplanationStyle::kPlainEnglish));
  }
  return out;
}

inline std::optional<double> fraction(const std::optional<double>& median_l0, std::size_t width) {
  if (!median_l0 || width == 0) return std::nullopt;
  return *median_l0 / static_cast<double>(width);
}

}  // namespace detail

/// Runs the identical gradient search over the tabular and pixel arms and
/// assembles the comparison report.
inline DivideReport run_divide_experiment(const ExperimentConfig& cfg) {
  DivideReport report;
  report.provenance.config = cfg.echo;
  report.provenance.seed = cfg.seed;

  try {
    const auto model_text = read_file(cfg.tabular.model);
    const auto net = model_from_json(model_text);
    report.provenance.model_hashes["tabular"] = text::fnv1a_hex(model_text);
    const auto cat = load_catalog(cfg.tabular.catalog);
    cat.bind(net);
    const auto data = detail::first_rows(
        load_dataset_csv(cfg.tabular.data, {cfg.tabular.label_column, {}}, net.class_labels()),
        cfg.tabular.max_rows);
    auto& arm = report.tabular;
    arm.name = "tabular";
    arm.metric = cfg.tabular.metric;
    BatchOptions opt;
    opt.search = cfg.tabular.search;
    opt.search.metric = detail::arm_metric(cfg.tabular.metric, data, cfg.tabular.data, arm.metric_weights);
    opt.search.box = Box::from_dataset(data);
    if (cfg.tabular.target) opt.target_class = net.class_index(*cfg.tabular.target);
    arm.stats = evaluate_batch(net, data, opt);
    arm.samples = detail::sample_explanations(arm.stats, cat, cfg.tabular.samples, opt.target_class);
  } catch (const Error& e) {
    throw ArmError("tabular", e);
  }

  try {
    const auto model_text = read_file(cfg.pixel.model);
    const auto net = model_from_json(model_text);
    report.provenance.model_hashes["pixel"] = text::fnv1a_hex(model_text);
    const auto data = detail::first_rows(
        load_dataset_csv(cfg.pixel.data, {cfg.pixel.label_column, {}}, net.class_labels()),
        cfg.pixel.max_rows);
    std::vector<std::string> decisions = cfg.pixel.decisions;
    if (decisions.empty()) {
      for (const auto& l : net.class_labels()) decisions.push_back("classified as \"" + l + "\"");
    }
    const auto cat = pixel_catalog(cfg.pixel.image_rows, cfg.pixel.image_cols, cfg.pixel.channel, decisions);
    cat.bind(net);
    auto& arm = report.pixel;
    arm.name = "pixel";
    arm.metric = cfg.pixel.metric;
    BatchOptions opt;
    opt.search = cfg.pixel.search;
    opt.search.metric = detail::arm_metric(cfg.pixel.metric, data, cfg.pixel.data, arm.metric_weights);
    opt.search.box = Box::uniform(data.width(), 0.0, 1.0);
    if (cfg.pixel.target) opt.target_class = net.class_index(*cfg.pixel.target);
    arm.stats = evaluate_batch(net, data, opt);
    arm.samples = detail::sample_explanations(arm.stats, cat, cfg.pixel.samples, opt.target_class);
    if (cfg.pixel.one_pixel) {
      BatchOptions op = opt;
      op.strategy = Strategy::kOnePixel;
      op.pixels = cfg.pixel.pixels;
      op.de = cfg.pixel.de;
      op.search.metric = MetricSpec::l0();
      arm.one_pixel = evaluate_batch(net, data, op);
    }
  } catch (const Error& e) {
    throw ArmError("pixel", e);
  }

  auto& c = report.comparison;
  c.tabular_median_l0 = report.tabular.stats.median_l0;
  c.pixel_median_l0 = report.pixel.stats.median_l0;
  c.tabular_width = report.tabular.stats.width;
  c.pixel_width = report.pixel.stats.width;
  c.tabular_fraction_changed = detail::fraction(c.tabular_median_l0, c.tabular_width);
  c.pixel_fraction_changed = detail::fraction(c.pixel_median_l0, c.pixel_width);
  return report;
}

}  // namespace cfx
