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

// cfx: command-line front end.
//
// Exit status: 0 success, 1 search exhausted, 2 validation or parse error,
// 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfx/cfx.hpp"

namespace {

using namespace cfx;
namespace fs = std::filesystem;

constexpr int kExhausted = 1;

struct Globals {
  std::uint64_t seed = 0;
  std::string model;
  std::string data;
  std::string catalog;
  std::string metric;
  std::string target;
  std::string out;
  std::vector<std::string> formats;
  std::string label_column = "label";
};

std::string need(const std::string& value, const char* flag) {
  if (value.empty()) throw ParameterError(std::string("missing required option ") + flag);
  return value;
}

std::vector<ReportFormat> report_formats(const std::vector<std::string>& names) {
  if (names.empty()) return {ReportFormat::kJson, ReportFormat::kMarkdown};
  std::vector<ReportFormat> out;
  for (const auto& n : names) out.push_back(n == "json" ? ReportFormat::kJson : ReportFormat::kMarkdown);
  return out;
}

bool wants(const Globals& g, const char* fmt) {
  if (g.formats.empty()) return true;
  for (const auto& f : g.formats) {
    if (f == fmt) return true;
  }
  return false;
}

MetricSpec resolve_metric(const std::string& name, const Dataset& data) {
  switch (parse_metric_kind(name)) {
    case MetricKind::kMadL1: return compute_mad(data).metric();
    case MetricKind::kL0: return MetricSpec::l0();
    case MetricKind::kL1: return MetricSpec::l1();
    case MetricKind::kL2: return MetricSpec::l2();
    case MetricKind::kLinf: return MetricSpec::linf();
  }
  return MetricSpec::l2();
}

const Vector& pick_row(const Dataset& data, std::size_t row) {
  if (row >= data.size()) {
    throw IndexError("row " + std::to_string(row) + " out of range (dataset has " +
                     std::to_string(data.size()) + " rows)");
  }
  return data.row(row);
}

std::size_t resolve_target(const Network& net, const Globals& g, std::span<const double> x) {
  if (!g.target.empty()) return net.class_index(g.target);
  if (net.is_binary()) return 1 - predict_index(net, x);
  return runner_up_class(net, x);
}

// Writes `files` under g.out (if set) after all computation is finished.
void write_outputs(const Globals& g, const std::vector<std::pair<std::string, std::string>>& files) {
  if (g.out.empty()) return;
  std::error_code ec;
  fs::create_directories(g.out, ec);
  if (ec) throw IoError("cannot create output directory '" + g.out + "': " + ec.message());
  for (const auto& [name, content] : files) write_file((fs::path(g.out) / name).string(), content);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string fixture;
  std::vector<std::size_t> hidden{8};
  std::size_t epochs = 200;
  double step = 0.1;
  std::vector<std::string> classes;
};

int run_train(const Globals& g, const TrainArgs& a) {
  if (!a.fixture.empty()) {
    std::vector<std::pair<std::string, std::string>> files;
    if (a.fixture == "loan") {
      const auto f = fixtures::loan_fixture(g.seed);
      files = {{"loan.csv", dataset_to_csv(f.data, f.model.class_labels())},
               {"loan_model.json", model_to_json(f.model)},
               {"loan_catalog.json", catalog_to_json(f.catalog).dump(2) + "\n"}};
      std::cout << "loan fixture: accuracy " << text::fixed(accuracy(f.model, f.data), 4) << "\n";
    } else {
      const auto f = fixtures::blob_fixture(g.seed);
      files = {{"blobs.csv", dataset_to_csv(f.data, f.model.class_labels())},
               {"blobs_model.json", model_to_json(f.model)}};
      std::cout << "blobs fixture: accuracy " << text::fixed(accuracy(f.model, f.data), 4) << "\n";
    }
    if (g.out.empty()) throw ParameterError("--out is required with --fixture");
    write_outputs(g, files);
    return 0;
  }
  if (a.classes.size() < 2) throw ParameterError("--classes needs at least two labels");
  const auto data = load_dataset_csv(need(g.data, "--data"), {g.label_column, {}}, a.classes);
  TrainOptions opt;
  opt.epochs = a.epochs;
  opt.step_size = a.step;
  opt.seed = g.seed;
  const auto net = fixtures::train_standardized(data, a.hidden, a.classes, a.classes.size() == 2, opt);
  std::cout << "accuracy " << text::fixed(accuracy(net, data), 4) << "\n";
  if (g.out.empty()) {
    std::cout << model_to_json(net);
  } else {
    write_outputs(g, {{"model.json", model_to_json(net)}});
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ExplainArgs {
  std::size_t row = 0;
  std::string style = "plain";
};

int run_explain(const Globals& g, const ExplainArgs& a) {
  const auto net = load_model(need(g.model, "--model"));
  const auto data = load_dataset_csv(need(g.data, "--data"), {g.label_column, {}}, net.class_labels());
  const auto cat = load_catalog(need(g.catalog, "--catalog"));
  cat.bind(net);
  const auto& x = pick_row(data, a.row);
  SearchConfig cfg;
  cfg.seed = g.seed;
  cfg.metric = resolve_metric(g.metric.empty() ? "madl1" : g.metric, data);
  cfg.box = Box::from_dataset(data);
  cfg.target_class = resolve_target(net, g, x.values());
  const auto r = generate_counterfactual(net, x, cfg);
  const auto from = predict_index(net, x.values());
  if (!r.converged()) {
    std::cerr << "search " << to_string(r.status) << " after " << r.outer_rounds << " rounds\n";
    return kExhausted;
  }
  const auto style = a.style == "formal" ? ExplanationStyle::kFormalTemplate : ExplanationStyle::kPlainEnglish;
  const auto diff = feature_diff(x.values(), r.counterfactual.values(), cat);
  const auto e = render_counterfactual(diff, cat, from, r.achieved_class, style,
                                       forward(net, x).probabilities[cfg.target_class],
                                       forward(net, r.counterfactual).probabilities[cfg.target_class]);
  std::cout << e.text << "\n";
  ordered_json j;
  j["row"] = a.row;
  j["result"] = to_json(r);
  j["explanation"] = to_json(e);
  std::vector<std::pair<std::string, std::string>> files;
  if (wants(g, "json")) files.emplace_back("explanation.json", j.dump(2) + "\n");
  if (wants(g, "md")) files.emplace_back("explanation.md", "> " + e.text + "\n");
  write_outputs(g, files);
  return 0;
}

// ---------------------------------------------------------------------------

struct ImageArgs {
  std::size_t rows = 8;
  std::size_t cols = 8;
};

struct AttackArgs {
  std::size_t row = 0;
  bool one_pixel = false;
  std::size_t pixels = 1;
  ImageArgs image;
};

int run_attack(const Globals& g, const AttackArgs& a) {
  const auto net = load_model(need(g.model, "--model"));
  const auto data = load_dataset_csv(need(g.data, "--data"), {g.label_column, {}}, net.class_labels());
  const auto& x = pick_row(data, a.row);
  const std::size_t original = predict_index(net, x.values());
  SearchResult r;
  if (a.one_pixel) {
    DifferentialEvolution de;
    de.seed = g.seed;
    const PixelTarget t = g.target.empty() ? PixelTarget::any_other() : PixelTarget::cls(net.class_index(g.target));
    r = one_pixel_attack(net, x, t, a.pixels, de);
  } else {
    SearchConfig cfg;
    cfg.seed = g.seed;
    cfg.metric = resolve_metric(g.metric.empty() ? "l2" : g.metric, data);
    cfg.box = Box::uniform(x.size(), 0.0, 1.0);
    cfg.target_class = resolve_target(net, g, x.values());
    r = generate_counterfactual(net, x, cfg);
  }
  std::cout << "status " << to_string(r.status) << ": " << net.label(original) << " -> "
            << net.label(r.achieved_class) << ", " << r.l0_changed << " of " << x.size()
            << " dimensions changed\n";
  std::vector<std::pair<std::string, std::string>> files;
  if (wants(g, "json")) files.emplace_back("attack.json", to_json(r).dump(2) + "\n");
  if (a.image.rows * a.image.cols == x.size()) {
    files.emplace_back("original.pgm", to_pgm(x.values(), a.image.rows, a.image.cols));
    files.emplace_back("adversarial.pgm", to_pgm(r.counterfactual.values(), a.image.rows, a.image.cols));
  }
  write_outputs(g, files);
  return r.converged() ? 0 : kExhausted;
}

// ---------------------------------------------------------------------------

struct HiddenArgs {
  std::size_t row = 0;
  std::size_t layer = 0;
  std::string annotations;
  std::string noun = "input";
};

int run_hidden(const Globals& g, const HiddenArgs& a) {
  const auto net = load_model(need(g.model, "--model"));
  const auto data = load_dataset_csv(need(g.data, "--data"), {g.label_column, {}}, net.class_labels());
  std::vector<UnitAnnotation> anns;
  if (!a.annotations.empty()) {
    anns = load_annotations(a.annotations);
    validate_annotations(net, anns);
  }
  const auto& x = pick_row(data, a.row);
  SearchConfig cfg;
  cfg.seed = g.seed;
  const std::string metric = g.metric.empty() ? "l1" : g.metric;
  if (parse_metric_kind(metric) == MetricKind::kMadL1) {
    throw ParameterError("madl1 is not available in activation space; use l0, l1, l2 or linf");
  }
  cfg.metric = resolve_metric(metric, data);
  cfg.target_class = resolve_target(net, g, x.values());
  const auto h = hidden_layer_counterfactual(net, a.layer, x, cfg, data);
  if (!h.search.converged()) {
    std::cerr << "search " << to_string(h.search.status) << "\n";
    return kExhausted;
  }
  HiddenRenderOptions opt;
  opt.input_noun = a.noun;
  const auto e = render_hidden_counterfactual(a.layer, h.deltas, anns, net.label(predict_index(net, x.values())),
                                              net.label(h.search.achieved_class), opt);
  std::cout << e.text << "\n";
  ordered_json j;
  j["layer"] = a.layer;
  j["result"] = to_json(h.search);
  j["explanation"] = to_json(e);
  std::vector<std::pair<std::string, std::string>> files;
  if (wants(g, "json")) files.emplace_back("hidden.json", j.dump(2) + "\n");
  if (wants(g, "md")) files.emplace_back("hidden.md", "> " + e.text + "\n");
  write_outputs(g, files);
  return 0;
}

// ---------------------------------------------------------------------------

struct ProbeArgs {
  std::string mode = "exemplars";
  std::size_t layer = 0;
  std::size_t unit = 0;
  std::size_t k = 5;
  std::size_t row = 0;
  std::size_t iterations = 200;
  double step = 0.1;
  std::string init = "noise";
  ImageArgs image;
};

int run_probe(const Globals& g, const ProbeArgs& a) {
  const auto net = load_model(need(g.model, "--model"));
  const auto target = ProbeTarget::unit(a.layer, a.unit);
  std::optional<Dataset> data;
  if (!g.data.empty()) data = load_dataset_csv(g.data, {g.label_column, {}}, net.class_labels());
  const bool image = a.image.rows * a.image.cols == net.input_width();
  std::vector<std::pair<std::string, std::string>> files;
  ordered_json j;
  j["layer"] = a.layer;
  j["unit"] = a.unit;
  j["mode"] = a.mode;

  if (a.mode == "exemplars") {
    if (!data) throw ParameterError("exemplars need --data");
    const auto ex = top_exemplars(net, *data, target, a.k);
    j["exemplars"] = ordered_json::array();
    for (const auto& e : ex) {
      std::cout << "row " << e.row << "  activation " << text::fixed(e.activation, 6) << "\n";
      j["exemplars"].push_back({{"row", e.row}, {"activation", e.activation}});
    }
  } else if (a.mode == "maximize") {
    MaximizeConfig cfg;
    cfg.box = data ? Box::from_dataset(*data) : Box::uniform(net.input_width(), 0.0, 1.0);
    cfg.step_size = a.step;
    cfg.iterations = a.iterations;
    cfg.noise_seed = g.seed;
    if (a.init == "noise") {
      cfg.seed_kind = SeedKind::kNoise;
    } else if (a.init == "row") {
      if (!data) throw ParameterError("--init row needs --data");
      cfg.seed_kind = SeedKind::kDatasetRow;
      cfg.seed_row = pick_row(*data, a.row);
    }
    const auto r = activation_maximization(net, target, cfg);
    std::cout << "activation " << text::fixed(r.seed_activation, 6) << " -> " << text::fixed(r.activation, 6)
              << (r.zero_gradient ? " (zero gradient)" : "") << "\n";
    j["seed_activation"] = r.seed_activation;
    j["activation"] = r.activation;
    j["zero_gradient"] = r.zero_gradient;
    j["input"] = r.input.raw();
    if (image) files.emplace_back("maximize.pgm", to_pgm(r.input.values(), a.image.rows, a.image.cols));
  } else {
    if (!data) throw ParameterError("saliency needs --data");
    const auto s = saliency_map(net, pick_row(*data, a.row), target);
    const double peak = *std::max_element(s.begin(), s.end());
    std::cout << "peak saliency " << text::fixed(peak, 6) << "\n";
    j["row"] = a.row;
    j["saliency"] = s;
    if (image) {
      files.emplace_back("saliency.pgm", to_pgm(s, a.image.rows, a.image.cols, 0.0, peak > 0.0 ? peak : 1.0));
    }
  }
  if (wants(g, "json")) files.emplace_back("probe.json", j.dump(2) + "\n");
  write_outputs(g, files);
  return 0;
}

// ---------------------------------------------------------------------------

int run_divide(const Globals& g, const std::string& config, bool seed_given) {
  auto cfg = load_experiment_config(need(config, "--config"));
  if (seed_given) {
    cfg.seed = g.seed;
    cfg.tabular.search.seed = g.seed;
    cfg.pixel.search.seed = g.seed;
    cfg.pixel.de.seed = g.seed;
    cfg.echo["seed"] = g.seed;
  }
  if (!g.out.empty()) cfg.output_dir = g.out;
  const auto report = run_divide_experiment(cfg);
  for (const auto& path : emit_report(report, cfg.output_dir, report_formats(g.formats))) {
    std::cout << "wrote " << path << "\n";
  }
  const auto& c = report.comparison;
  std::cout << "tabular median L0 " << (c.tabular_median_l0 ? text::trimmed(*c.tabular_median_l0, 2) : "n/a")
            << " of " << c.tabular_width << "; pixel median L0 "
            << (c.pixel_median_l0 ? text::trimmed(*c.pixel_median_l0, 2) : "n/a") << " of " << c.pixel_width
            << "\n";
  return 0;
}

int run_report(const Globals& g, const std::string& in) {
  const auto report = parse_report_json(read_file(need(in, "--in")));
  if (g.out.empty()) {
    std::cout << report_markdown(report);
    return 0;
  }
  for (const auto& path : emit_report(report, g.out, report_formats(g.formats))) {
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cfx: counterfactual explanations and adversarial search for small networks"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for every stochastic component");
  app.add_option("--model", g.model, "Model JSON");
  app.add_option("--data", g.data, "Dataset CSV");
  app.add_option("--catalog", g.catalog, "Feature catalog JSON");
  app.add_option("--metric", g.metric, "Distance metric")
      ->check(CLI::IsMember({"l0", "l1", "l2", "linf", "madl1"}));
  app.add_option("--target", g.target, "Target class label");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--format", g.formats, "Output formats (repeatable)")->check(CLI::IsMember({"json", "md"}));
  app.add_option("--label-column", g.label_column, "Label column name in CSV files");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model, or generate a shipped fixture");
  train->add_option("--fixture", train_args.fixture, "Generate fixture data and model")
      ->check(CLI::IsMember({"loan", "blobs"}));
  train->add_option("--hidden", train_args.hidden, "Hidden layer widths");
  train->add_option("--epochs", train_args.epochs);
  train->add_option("--step", train_args.step);
  train->add_option("--classes", train_args.classes, "Class labels in index order");

  ExplainArgs explain_args;
  auto* explain = app.add_subcommand("explain", "Counterfactual explanation for one tabular row");
  explain->add_option("--row", explain_args.row);
  explain->add_option("--style", explain_args.style)->check(CLI::IsMember({"plain", "formal"}));

  AttackArgs attack_args;
  auto* attack = app.add_subcommand("attack", "Adversarial search on one image row");
  attack->add_option("--row", attack_args.row);
  attack->add_flag("--one-pixel", attack_args.one_pixel, "Differential-evolution pixel attack");
  attack->add_option("--pixels", attack_args.pixels, "Pixel budget for --one-pixel");
  attack->add_option("--image-rows", attack_args.image.rows);
  attack->add_option("--image-cols", attack_args.image.cols);

  HiddenArgs hidden_args;
  auto* hidden = app.add_subcommand("hidden", "Counterfactual in a hidden layer's activation space");
  hidden->add_option("--row", hidden_args.row);
  hidden->add_option("--layer", hidden_args.layer);
  hidden->add_option("--annotations", hidden_args.annotations, "Unit annotation JSON");
  hidden->add_option("--noun", hidden_args.noun, "What the input is called in the sentence");

  ProbeArgs probe_args;
  auto* probe = app.add_subcommand("probe", "Exemplars, activation maximization or saliency for one unit");
  probe->add_option("--mode", probe_args.mode)->check(CLI::IsMember({"exemplars", "maximize", "saliency"}));
  probe->add_option("--layer", probe_args.layer);
  probe->add_option("--unit", probe_args.unit);
  probe->add_option("-k,--top", probe_args.k);
  probe->add_option("--row", probe_args.row);
  probe->add_option("--iterations", probe_args.iterations);
  probe->add_option("--step", probe_args.step);
  probe->add_option("--init", probe_args.init)->check(CLI::IsMember({"zeros", "row", "noise"}));
  probe->add_option("--image-rows", probe_args.image.rows);
  probe->add_option("--image-cols", probe_args.image.cols);

  std::string divide_config;
  auto* divide = app.add_subcommand("divide", "Run the tabular vs pixel comparison experiment");
  divide->add_option("--config", divide_config, "Experiment JSON")->required();

  std::string report_in;
  auto* report = app.add_subcommand("report", "Re-render a saved report");
  report->add_option("--in", report_in, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return run_train(g, train_args);
    if (*explain) return run_explain(g, explain_args);
    if (*attack) return run_attack(g, attack_args);
    if (*hidden) return run_hidden(g, hidden_args);
    if (*probe) return run_probe(g, probe_args);
    if (*divide) return run_divide(g, divide_config, seed_opt->count() > 0);
    if (*report) return run_report(g, report_in);
  } catch (const cfx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
