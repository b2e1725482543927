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
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfx/errors.hpp"
#include "cfx/generator.hpp"
#include "cfx/model.hpp"
#include "cfx/text.hpp"

namespace cfx {

enum class FeatureKind { kContinuous, kInteger };

struct FeatureEntry {
  std::string name;
  std::string short_name;  // used on second mention; empty means `name`
  std::string unit;        // prefix, copied verbatim (e.g. "£")
  FeatureKind kind = FeatureKind::kContinuous;
  int precision = 2;
  bool is_mutable = true;  // reported only; searches ignore it

  const std::string& second_mention() const { return short_name.empty() ? name : short_name; }

  /// Display text: unit prefix, rounded to precision (integers to 0
  /// decimals), thousands grouped.
  std::string format(double v) const {
    const int digits = kind == FeatureKind::kInteger ? 0 : precision;
    std::string body = text::group_thousands(text::fixed(v, digits));
    if (!body.empty() && body.front() == '-') return "-" + unit + body.substr(1);
    return unit + body;
  }

  friend bool operator==(const FeatureEntry&, const FeatureEntry&) = default;
};

/// Per-dimension meanings plus one decision phrase per class.
class FeatureCatalog {
 public:
  FeatureCatalog() = default;
  FeatureCatalog(std::vector<FeatureEntry> features, std::vector<std::string> decisions)
      : features_(std::move(features)), decisions_(std::move(decisions)) {
    if (features_.empty()) throw SchemaError("catalog has no features");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < features_.size(); ++i) {
      const auto& f = features_[i];
      if (f.name.empty()) throw SchemaError("catalog feature " + std::to_string(i) + " has an empty name");
      if (!seen.insert(f.name).second) throw SchemaError("duplicate feature name '" + f.name + "'");
      if (f.precision < 0 || f.precision > 12) {
        throw SchemaError("feature '" + f.name + "' precision must be in [0, 12]");
      }
    }
  }

  std::size_t size() const noexcept { return features_.size(); }
  const std::vector<FeatureEntry>& features() const noexcept { return features_; }
  const FeatureEntry& feature(std::size_t j) const { return features_.at(j); }
  const std::vector<std::string>& decisions() const noexcept { return decisions_; }

  const std::string& decision(std::size_t cls) const {
    if (cls >= decisions_.size()) {
      throw IndexError("class " + std::to_string(cls) + " has no decision label (" +
                       std::to_string(decisions_.size()) + " defined)");
    }
    return decisions_[cls];
  }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t j = 0; j < features_.size(); ++j) {
      if (features_[j].name == name) return j;
    }
    return std::nullopt;
  }

  /// Checks the catalog fits a model's input width and class count.
  void bind(const Network& net) const {
    if (features_.size() != net.input_width()) {
      throw BindingError("catalog: expected " + std::to_string(net.input_width()) + ", found " +
                         std::to_string(features_.size()) + " features");
    }
    if (decisions_.size() != net.class_count()) {
      throw BindingError("catalog decisions: expected " + std::to_string(net.class_count()) +
                         ", found " + std::to_string(decisions_.size()));
    }
  }

  friend bool operator==(const FeatureCatalog&, const FeatureCatalog&) = default;

 private:
  std::vector<FeatureEntry> features_;
  std::vector<std::string> decisions_;
};

inline nlohmann::json catalog_to_json(const FeatureCatalog& cat) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : cat.features()) {
    nlohmann::json e{{"name", f.name},
                     {"kind", f.kind == FeatureKind::kInteger ? "integer" : "continuous"},
                     {"precision", f.precision},
                     {"mutable", f.is_mutable}};
    if (!f.short_name.empty()) e["short_name"] = f.short_name;
    if (!f.unit.empty()) e["unit"] = f.unit;
    features.push_back(std::move(e));
  }
  return {{"features", features}, {"decisions", cat.decisions()}};
}

inline FeatureCatalog catalog_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("features") || !j["features"].is_array()) {
    throw ParseError("catalog: missing 'features' array");
  }
  if (!j.contains("decisions") || !j["decisions"].is_array()) {
    throw ParseError("catalog: missing 'decisions' array");
  }
  std::vector<FeatureEntry> entries;
  for (std::size_t i = 0; i < j["features"].size(); ++i) {
    const auto& jf = j["features"][i];
    const std::string where = "catalog feature " + std::to_string(i);
    FeatureEntry f;
    f.name = detail::require_field<std::string>(jf, "name", where);
    f.short_name = jf.value("short_name", std::string{});
    f.unit = jf.value("unit", std::string{});
    const auto kind = jf.value("kind", std::string{"continuous"});
    if (kind == "integer") {
      f.kind = FeatureKind::kInteger;
    } else if (kind != "continuous") {
      throw ParseError(where + ": unknown kind '" + kind + "'");
    }
    f.precision = jf.value("precision", 2);
    f.is_mutable = jf.value("mutable", true);
    entries.push_back(std::move(f));
  }
  return FeatureCatalog(std::move(entries), j["decisions"].get<std::vector<std::string>>());
}

inline FeatureCatalog load_catalog(const std::string& path) {
  const auto content = read_file(path);
  try {
    return catalog_from_json(nlohmann::json::parse(content));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("catalog '" + path + "': " + e.what());
  }
}

inline void save_catalog(const FeatureCatalog& cat, const std::string& path) {
  write_file(path, catalog_to_json(cat).dump(2) + "\n");
}

/// Catalog for a rows x cols single-channel image:
/// "pixel (r,c) <channel> value".
inline FeatureCatalog pixel_catalog(std::size_t rows, std::size_t cols, const std::string& channel,
                                    std::vector<std::string> decisions, int precision = 2) {
  std::vector<FeatureEntry> entries;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      FeatureEntry f;
      f.name = "pixel (" + std::to_string(r) + "," + std::to_string(c) + ") " + channel + " value";
      f.precision = precision;
      entries.push_back(std::move(f));
    }
  }
  return FeatureCatalog(std::move(entries), std::move(decisions));
}

// ---------------------------------------------------------------------------

struct FeatureChange {
  std::size_t index = 0;
  std::string name;
  double old_value = 0.0;
  double new_value = 0.0;
  std::string old_text;  // catalog-formatted
  std::string new_text;
};

/// Features with |x_j - x'_j| > tolerance, largest change first (index
/// order on ties).
inline std::vector<FeatureChange> feature_diff(std::span<const double> x, std::span<const double> xp,
                                               const FeatureCatalog& cat,
                                               double tolerance = kDefaultL0Tolerance) {
  if (x.size() != xp.size() || x.size() != cat.size()) {
    throw ShapeError("feature_diff: vectors of length " + std::to_string(x.size()) + " and " +
                     std::to_string(xp.size()) + " against a catalog of " +
                     std::to_string(cat.size()));
  }
  std::vector<FeatureChange> out;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (std::abs(x[j] - xp[j]) > tolerance) {
      const auto& f = cat.feature(j);
      out.push_back({j, f.name, x[j], xp[j], f.format(x[j]), f.format(xp[j])});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const FeatureChange& a, const FeatureChange& b) {
    return std::abs(a.new_value - a.old_value) > std::abs(b.new_value - b.old_value);
  });
  return out;
}

enum class ExplanationStyle { kPlainEnglish, kFormalTemplate, kHiddenUnit };

inline std::string_view to_string(ExplanationStyle s) {
  switch (s) {
    case ExplanationStyle::kPlainEnglish: return "plain-english";
    case ExplanationStyle::kFormalTemplate: return "formal-template";
    case ExplanationStyle::kHiddenUnit: return "hidden-unit";
  }
  return "plain-english";
}

struct Explanation {
  ExplanationStyle style = ExplanationStyle::kPlainEnglish;
  std::vector<FeatureChange> changed;
  std::string from_label;
  std::string to_label;
  std::optional<double> score;
  std::optional<double> counterfactual_score;
  std::string text;
};

inline std::string identity_sentence(const std::string& to_label) {
  return "No change was required: the decision was already " + to_label + ".";
}

/// Score values for the formal template: up to 4 decimals, trailing zeros
/// dropped.
inline std::string format_score(double p) { return text::trimmed(p, 4); }

inline Explanation render_counterfactual(const std::vector<FeatureChange>& diff,
                                         const FeatureCatalog& cat, std::size_t from_class,
                                         std::size_t to_class, ExplanationStyle style,
                                         std::optional<double> score = std::nullopt,
                                         std::optional<double> counterfactual_score = std::nullopt) {
  if (style == ExplanationStyle::kHiddenUnit) {
    throw ParameterError("use render_hidden_counterfactual for hidden-unit explanations");
  }
  Explanation e;
  e.style = style;
  e.changed = diff;
  e.from_label = cat.decision(from_class);
  e.to_label = cat.decision(to_class);
  e.score = score;
  e.counterfactual_score = counterfactual_score;
  for (const auto& c : diff) {
    if (!cat.find(c.name)) throw IndexError("feature '" + c.name + "' is not in the catalog");
  }
  if (diff.empty()) {
    e.text = identity_sentence(e.to_label);
    return e;
  }
  auto entry = [&](const FeatureChange& c) -> const FeatureEntry& { return cat.feature(*cat.find(c.name)); };

  if (style == ExplanationStyle::kPlainEnglish) {
    std::vector<std::string> was, would;
    for (const auto& c : diff) {
      const auto& f = entry(c);
      was.push_back("your " + f.name + " was " + f.format(c.old_value));
      would.push_back("your " + f.second_mention() + " had been " + f.format(c.new_value));
    }
    e.text = "You were " + e.from_label + " because " + text::join(was, " and ") + ". If " +
             text::join(would, " and ") + ", you would have been " + e.to_label + ".";
    return e;
  }

  std::vector<std::string> names, before, after;
  for (const auto& c : diff) {
    const auto& f = entry(c);
    names.push_back(f.name);
    before.push_back(f.format(c.old_value));
    after.push_back(f.format(c.new_value));
  }
  const std::string p = score ? format_score(*score) : "p";
  const std::string pp = counterfactual_score ? format_score(*counterfactual_score) : "p'";
  e.text = "Score " + p + " was returned because variables (" + text::join(names, ", ") +
           ") had values (" + text::join(before, ", ") + ") associated with them. If (" +
           text::join(names, ", ") + ") instead had values (" + text::join(after, ", ") +
           "), and all other variables had remained constant, score " + pp +
           " would have been returned.";
  return e;
}

// ---------------------------------------------------------------------------
// Hidden units

enum class AnnotationProvenance { kHumanAssigned, kExemplarDerived };

struct UnitAnnotation {
  std::size_t layer = 0;
  std::size_t unit = 0;
  std::optional<std::string> gloss;
  AnnotationProvenance provenance = AnnotationProvenance::kHumanAssigned;
};

inline void validate_annotations(const Network& net, const std::vector<UnitAnnotation>& anns) {
  for (const auto& a : anns) {
    if (a.layer >= net.layer_count() || a.unit >= net.layers()[a.layer].output_width()) {
      throw IndexError("annotation for layer " + std::to_string(a.layer) + " unit " +
                       std::to_string(a.unit) + " does not exist in the model");
    }
  }
}

inline nlohmann::json annotations_to_json(const std::vector<UnitAnnotation>& anns) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& a : anns) {
    out.push_back({{"layer", a.layer},
                   {"unit", a.unit},
                   {"gloss", a.gloss ? nlohmann::json(*a.gloss) : nlohmann::json(nullptr)},
                   {"provenance", a.provenance == AnnotationProvenance::kHumanAssigned
                                      ? "human-assigned"
                                      : "exemplar-derived"}});
  }
  return out;
}

inline std::vector<UnitAnnotation> annotations_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("annotations: expected a JSON array");
  std::vector<UnitAnnotation> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "annotation " + std::to_string(i);
    UnitAnnotation a;
    a.layer = detail::require_field<std::size_t>(j[i], "layer", where);
    a.unit = detail::require_field<std::size_t>(j[i], "unit", where);
    if (j[i].contains("gloss") && !j[i]["gloss"].is_null()) a.gloss = j[i]["gloss"].get<std::string>();
    const auto prov = j[i].value("provenance", std::string{"human-assigned"});
    if (prov == "exemplar-derived") {
      a.provenance = AnnotationProvenance::kExemplarDerived;
    } else if (prov != "human-assigned") {
      throw ParseError(where + ": unknown provenance '" + prov + "'");
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<UnitAnnotation> load_annotations(const std::string& path) {
  const auto content = read_file(path);
  try {
    return annotations_from_json(nlohmann::json::parse(content));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("annotations '" + path + "': " + e.what());
  }
}

struct HiddenRenderOptions {
  std::string input_noun = "input";
  int precision = 2;
};

/// One sentence per changed unit, joined by spaces.
inline Explanation render_hidden_counterfactual(std::size_t layer, const std::vector<UnitDelta>& deltas,
                                                const std::vector<UnitAnnotation>& annotations,
                                                const std::string& from_label,
                                                const std::string& to_label,
                                                const HiddenRenderOptions& opt = {}) {
  Explanation e;
  e.style = ExplanationStyle::kHiddenUnit;
  e.from_label = from_label;
  e.to_label = to_label;
  if (deltas.empty()) {
    e.text = identity_sentence(to_label);
    return e;
  }
  std::vector<std::string> sentences;
  for (const auto& d : deltas) {
    std::string gloss;
    for (const auto& a : annotations) {
      if (a.layer == layer && a.unit == d.unit && a.gloss) {
        gloss = ", which generally activates for " + *a.gloss + ",";
        break;
      }
    }
    const std::string unit = std::to_string(d.unit);
    sentences.push_back("The " + opt.input_noun + " was labelled \"" + from_label +
                        "\" because hidden neuron " + unit + gloss + " had an activation of " +
                        text::fixed(d.old_value, opt.precision) + ". If hidden neuron " + unit +
                        " had an activation of " + text::fixed(d.new_value, opt.precision) +
                        " the " + opt.input_noun + " would have been labelled \"" + to_label +
                        "\".");
    e.changed.push_back({d.unit, "hidden neuron " + unit, d.old_value, d.new_value,
                         text::fixed(d.old_value, opt.precision),
                         text::fixed(d.new_value, opt.precision)});
  }
  e.text = text::join(sentences, " ");
  return e;
}

}  // namespace cfx
