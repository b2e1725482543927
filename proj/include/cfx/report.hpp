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
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfx/errors.hpp"
#include "cfx/generator.hpp"
#include "cfx/semantics.hpp"
#include "cfx/text.hpp"

namespace cfx {

using ordered_json = nlohmann::ordered_json;

struct ArmReport {
  std::string name;
  std::string metric;
  std::vector<double> metric_weights;  // MadL1 weights, empty otherwise
  BatchStats stats;
  std::optional<BatchStats> one_pixel;
  std::vector<Explanation> samples;
};

struct SparsityComparison {
  std::optional<double> tabular_median_l0;
  std::optional<double> pixel_median_l0;
  std::size_t tabular_width = 0;
  std::size_t pixel_width = 0;
  std::optional<double> tabular_fraction_changed;
  std::optional<double> pixel_fraction_changed;
};

struct Provenance {
  ordered_json config;
  std::map<std::string, std::string> model_hashes;
  std::uint64_t seed = 0;
};

struct DivideReport {
  ArmReport tabular;
  ArmReport pixel;
  SparsityComparison comparison;
  Provenance provenance;
};

namespace detail {

template <typename T>
ordered_json optional_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace detail

// --- SearchResult ----------------------------------------------------------

inline ordered_json to_json(const SearchResult& r) {
  return ordered_json{{"status", to_string(r.status)},
                      {"counterfactual", r.counterfactual.raw()},
                      {"achieved_class", r.achieved_class},
                      {"distance", r.distance},
                      {"l0_changed", r.l0_changed},
                      {"outer_rounds", r.outer_rounds},
                      {"inner_iterations", r.inner_iterations},
                      {"objective_trace", r.objective_trace},
                      {"seed", r.seed}};
}

inline SearchResult search_result_from_json(const ordered_json& j) {
  SearchResult r;
  r.status = parse_search_status(j.at("status").get<std::string>());
  r.counterfactual = Vector(j.at("counterfactual").get<std::vector<double>>());
  r.achieved_class = j.at("achieved_class").get<std::size_t>();
  r.distance = j.at("distance").get<double>();
  r.l0_changed = j.at("l0_changed").get<std::size_t>();
  r.outer_rounds = j.at("outer_rounds").get<std::size_t>();
  r.inner_iterations = j.at("inner_iterations").get<std::size_t>();
  r.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

// --- BatchStats ------------------------------------------------------------

inline ordered_json to_json(const BatchStats& s) {
  ordered_json distances = ordered_json::object();
  for (const auto& [name, d] : s.distances) distances[name] = {{"mean", d.mean}, {"median", d.median}};
  ordered_json instances = ordered_json::array();
  for (const auto& inst : s.instances) {
    instances.push_back({{"row", inst.row},
                         {"input", inst.input.raw()},
                         {"original_class", inst.original_class},
                         {"target_class", inst.target_class},
                         {"result", to_json(inst.result)}});
  }
  return ordered_json{{"strategy", s.strategy},
                      {"total", s.total},
                      {"skipped", s.skipped},
                      {"attempted", s.attempted},
                      {"converged", s.converged},
                      {"success_rate", s.success_rate},
                      {"median_l0_changed", detail::optional_json(s.median_l0)},
                      {"width", s.width},
                      {"distances", distances},
                      {"instances", instances}};
}

inline BatchStats batch_stats_from_json(const ordered_json& j) {
  BatchStats s;
  s.strategy = j.at("strategy").get<std::string>();
  s.total = j.at("total").get<std::size_t>();
  s.skipped = j.at("skipped").get<std::size_t>();
  s.attempted = j.at("attempted").get<std::size_t>();
  s.converged = j.at("converged").get<std::size_t>();
  s.success_rate = j.at("success_rate").get<double>();
  s.median_l0 = detail::optional_from<double>(j, "median_l0_changed");
  s.width = j.at("width").get<std::size_t>();
  for (const auto& [name, d] : j.at("distances").items()) {
    s.distances[name] = {d.at("mean").get<double>(), d.at("median").get<double>()};
  }
  for (const auto& ji : j.at("instances")) {
    InstanceResult inst;
    inst.row = ji.at("row").get<std::size_t>();
    inst.input = Vector(ji.at("input").get<std::vector<double>>());
    inst.original_class = ji.at("original_class").get<std::size_t>();
    inst.target_class = ji.at("target_class").get<std::size_t>();
    inst.result = search_result_from_json(ji.at("result"));
    s.instances.push_back(std::move(inst));
  }
  return s;
}

// --- Explanation -----------------------------------------------------------

inline ordered_json to_json(const Explanation& e) {
  ordered_json changed = ordered_json::array();
  for (const auto& c : e.changed) {
    changed.push_back({{"index", c.index},
                       {"name", c.name},
                       {"old", c.old_value},
                       {"new", c.new_value},
                       {"old_display", c.old_text},
                       {"new_display", c.new_text}});
  }
  return ordered_json{{"style", to_string(e.style)},
                      {"changed", changed},
                      {"from_label", e.from_label},
                      {"to_label", e.to_label},
                      {"score", detail::optional_json(e.score)},
                      {"counterfactual_score", detail::optional_json(e.counterfactual_score)},
                      {"text", e.text}};
}

inline Explanation explanation_from_json(const ordered_json& j) {
  Explanation e;
  const auto style = j.at("style").get<std::string>();
  if (style == "plain-english") {
    e.style = ExplanationStyle::kPlainEnglish;
  } else if (style == "formal-template") {
    e.style = ExplanationStyle::kFormalTemplate;
  } else if (style == "hidden-unit") {
    e.style = ExplanationStyle::kHiddenUnit;
  } else {
    throw ParseError("unknown explanation style '" + style + "'");
  }
  for (const auto& c : j.at("changed")) {
    e.changed.push_back({c.at("index").get<std::size_t>(), c.at("name").get<std::string>(),
                         c.at("old").get<double>(), c.at("new").get<double>(),
                         c.at("old_display").get<std::string>(),
                         c.at("new_display").get<std::string>()});
  }
  e.from_label = j.at("from_label").get<std::string>();
  e.to_label = j.at("to_label").get<std::string>();
  e.score = detail::optional_from<double>(j, "score");
  e.counterfactual_score = detail::optional_from<double>(j, "counterfactual_score");
  e.text = j.at("text").get<std::string>();
  return e;
}

// --- DivideReport ----------------------------------------------------------

inline ordered_json to_json(const ArmReport& a) {
  ordered_json samples = ordered_json::array();
  for (const auto& e : a.samples) samples.push_back(to_json(e));
  return ordered_json{{"name", a.name},
                      {"metric", a.metric},
                      {"metric_weights", a.metric_weights},
                      {"stats", to_json(a.stats)},
                      {"one_pixel", a.one_pixel ? to_json(*a.one_pixel) : ordered_json(nullptr)},
                      {"samples", samples}};
}

inline ArmReport arm_report_from_json(const ordered_json& j) {
  ArmReport a;
  a.name = j.at("name").get<std::string>();
  a.metric = j.at("metric").get<std::string>();
  a.metric_weights = j.at("metric_weights").get<std::vector<double>>();
  a.stats = batch_stats_from_json(j.at("stats"));
  if (!j.at("one_pixel").is_null()) a.one_pixel = batch_stats_from_json(j.at("one_pixel"));
  for (const auto& e : j.at("samples")) a.samples.push_back(explanation_from_json(e));
  return a;
}

inline ordered_json to_json(const DivideReport& r) {
  const auto& c = r.comparison;
  return ordered_json{
      {"tabular", to_json(r.tabular)},
      {"pixel", to_json(r.pixel)},
      {"comparison",
       {{"tabular_median_l0", detail::optional_json(c.tabular_median_l0)},
        {"pixel_median_l0", detail::optional_json(c.pixel_median_l0)},
        {"tabular_width", c.tabular_width},
        {"pixel_width", c.pixel_width},
        {"tabular_fraction_changed", detail::optional_json(c.tabular_fraction_changed)},
        {"pixel_fraction_changed", detail::optional_json(c.pixel_fraction_changed)}}},
      {"provenance",
       {{"config", r.provenance.config},
        {"model_hashes", r.provenance.model_hashes},
        {"seed", r.provenance.seed}}}};
}

inline DivideReport divide_report_from_json(const ordered_json& j) {
  try {
    DivideReport r;
    r.tabular = arm_report_from_json(j.at("tabular"));
    r.pixel = arm_report_from_json(j.at("pixel"));
    const auto& c = j.at("comparison");
    r.comparison.tabular_median_l0 = detail::optional_from<double>(c, "tabular_median_l0");
    r.comparison.pixel_median_l0 = detail::optional_from<double>(c, "pixel_median_l0");
    r.comparison.tabular_width = c.at("tabular_width").get<std::size_t>();
    r.comparison.pixel_width = c.at("pixel_width").get<std::size_t>();
    r.comparison.tabular_fraction_changed = detail::optional_from<double>(c, "tabular_fraction_changed");
    r.comparison.pixel_fraction_changed = detail::optional_from<double>(c, "pixel_fraction_changed");
    const auto& p = j.at("provenance");
    r.provenance.config = p.at("config");
    r.provenance.model_hashes = p.at("model_hashes").get<std::map<std::string, std::string>>();
    r.provenance.seed = p.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

inline std::string report_json_text(const DivideReport& r) { return to_json(r).dump(2) + "\n"; }

inline DivideReport parse_report_json(const std::string& content) {
  try {
    return divide_report_from_json(ordered_json::parse(content));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what());
  }
}

// --- Markdown --------------------------------------------------------------

namespace detail {

inline std::string md_number(const std::optional<double>& v) {
  return v ? text::trimmed(*v, 4) : std::string("n/a");
}

inline std::string md_row(const std::string& arm, const std::string& metric, const BatchStats& s) {
  std::optional<double> fraction;
  if (s.median_l0 && s.width > 0) fraction = *s.median_l0 / static_cast<double>(s.width);
  std::ostringstream os;
  os << "| " << arm << " | " << metric << " | " << s.width << " | " << s.attempted << " | "
     << s.converged << " | " << text::trimmed(s.success_rate, 4) << " | " << md_number(s.median_l0)
     << " | " << md_number(fraction) << " |\n";
  return os.str();
}

inline void md_samples(std::ostringstream& os, const ArmReport& arm) {
  if (arm.samples.empty()) {
    os << "_No sample explanations._\n\n";
    return;
  }
  for (const auto& e : arm.samples) os << "> " << e.text << "\n\n";
}

inline void md_distances(std::ostringstream& os, const std::string& arm, const BatchStats& s) {
  for (const auto& [name, d] : s.distances) {
    os << "| " << arm << " | " << name << " | " << text::trimmed(d.mean, 6) << " | "
       << text::trimmed(d.median, 6) << " |\n";
  }
}

}  // namespace detail

inline std::string report_markdown(const DivideReport& r) {
  std::ostringstream os;
  os << "# Explanatory divide report\n\n";
  os << "Seed: " << r.provenance.seed << "\n\n";
  os << "The same counterfactual search was run over a tabular model with named features and over "
        "a raw-pixel model.\n\n";
  os << "## Sparsity comparison\n\n";
  os << "| Arm | Metric | Dimensions | Attempted | Converged | Success rate | Median L0 changed | "
        "Fraction of dimensions changed |\n";
  os << "|---|---|---|---|---|---|---|---|\n";
  os << detail::md_row("tabular", r.tabular.metric, r.tabular.stats);
  os << detail::md_row("pixel", r.pixel.metric, r.pixel.stats);
  if (r.pixel.one_pixel) os << detail::md_row("pixel (one-pixel)", "l0", *r.pixel.one_pixel);
  os << "\n## Tabular arm explanations\n\n";
  detail::md_samples(os, r.tabular);
  os << "## Pixel arm explanations\n\n";
  detail::md_samples(os, r.pixel);
  os << "## Distances over converged instances\n\n";
  os << "| Arm | Metric | Mean | Median |\n|---|---|---|---|\n";
  detail::md_distances(os, "tabular", r.tabular.stats);
  detail::md_distances(os, "pixel", r.pixel.stats);
  os << "\n## Provenance\n\n";
  for (const auto& [name, hash] : r.provenance.model_hashes) {
    os << "- " << name << " model: `" << hash << "`\n";
  }
  return os.str();
}

enum class ReportFormat { kJson, kMarkdown };

/// Writes report.json and/or report.md into `dir`. Both texts are built
/// before anything is written.
inline std::vector<std::string> emit_report(const DivideReport& r, const std::string& dir,
                                            const std::vector<ReportFormat>& formats) {
  std::vector<std::pair<std::string, std::string>> files;
  for (auto f : formats) {
    if (f == ReportFormat::kJson) {
      files.emplace_back((std::filesystem::path(dir) / "report.json").string(), report_json_text(r));
    } else {
      files.emplace_back((std::filesystem::path(dir) / "report.md").string(), report_markdown(r));
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  std::vector<std::string> written;
  for (const auto& [path, content] : files) {
    write_file(path, content);
    written.push_back(path);
  }
  return written;
}

}  // namespace cfx
