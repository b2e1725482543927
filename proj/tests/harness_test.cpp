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

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "cfx/cfx.hpp"

using namespace cfx;
namespace fs = std::filesystem;

namespace {

const std::string kDataDir = CFX_DATA_DIR;
const std::vector<std::string> kLoanLabels{"denied", "offered"};

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "cfx_harness_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig shipped_config() { return load_experiment_config(kDataDir + "/divide.json"); }

// A smaller variant of the shipped experiment for tests that run it often.
ExperimentConfig quick_config() {
  auto cfg = shipped_config();
  cfg.tabular.max_rows = 40;
  cfg.pixel.max_rows = 12;
  return cfg;
}

}  // namespace

TEST(Csv, ParsesWellFormedFile) {
  const auto d = parse_dataset_csv("income,age,label\n30000,41,denied\n52000,35,offered\n18000,22,denied\n",
                                   {}, kLoanLabels);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.width(), 2u);
  EXPECT_EQ(d.labels(), (std::vector<std::size_t>{0, 1, 0}));
  EXPECT_EQ(d.feature_names(), (std::vector<std::string>{"income", "age"}));
}

TEST(Csv, NonNumericCellNamesRowAndColumn) {
  try {
    parse_dataset_csv("income,age,label\n30000,41,denied\nabc,35,offered\n", {}, kLoanLabels);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2, column \"income\""), std::string::npos) << e.what();
  }
}

TEST(Csv, SchemaErrors) {
  try {
    parse_dataset_csv("income,label\n1,maybe\n", {}, kLoanLabels);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("allowed labels: denied, offered"), std::string::npos) << e.what();
  }
  try {
    parse_dataset_csv("income,label\n1,denied\n", {"label", {"income", "age"}}, kLoanLabels);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("\"age\""), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_dataset_csv("", {}, kLoanLabels), ParseError);
  EXPECT_THROW(parse_dataset_csv("income,label\n1,2,denied\n", {}, kLoanLabels), ParseError);
  EXPECT_THROW(load_dataset_csv("/nonexistent/file.csv", {}, kLoanLabels), IoError);
}

TEST(Csv, RoundTripsShippedFixture) {
  const auto f = fixtures::loan_fixture(0);
  const auto text = dataset_to_csv(f.data, kLoanLabels);
  const auto back = parse_dataset_csv(text, {}, kLoanLabels);
  EXPECT_EQ(back.rows(), f.data.rows());
  EXPECT_EQ(back.labels(), f.data.labels());
}

// The files under data/ are exactly what `cfx train --fixture` produces.
TEST(Fixtures, ShippedFilesMatchGenerators) {
  const auto loan = fixtures::loan_fixture(0);
  EXPECT_EQ(read_file(kDataDir + "/loan.csv"), dataset_to_csv(loan.data, kLoanLabels));
  EXPECT_EQ(read_file(kDataDir + "/loan_model.json"), model_to_json(loan.model));
  EXPECT_EQ(load_catalog(kDataDir + "/loan_catalog.json"), loan.catalog);
  const auto blobs = fixtures::blob_fixture(0);
  EXPECT_EQ(read_file(kDataDir + "/blobs_model.json"), model_to_json(blobs.model));
  EXPECT_GE(accuracy(blobs.model, blobs.data), 0.95);
}

TEST(Config, ResolvesPathsAndPropagatesSeed) {
  ordered_json j = ordered_json::parse(R"({
    "seed": 7,
    "tabular": {"model": "m.json", "data": "d.csv", "catalog": "c.json", "search": {"max_rounds": 3}},
    "pixel": {"model": "/abs/p.json", "data": "p.csv", "one_pixel": true, "de": {"population": 20}}
  })");
  const auto cfg = experiment_config_from_json(j, "/base/dir");
  EXPECT_EQ(cfg.tabular.model, "/base/dir/m.json");
  EXPECT_EQ(cfg.pixel.model, "/abs/p.json");
  EXPECT_EQ(cfg.tabular.metric, "madl1");
  EXPECT_EQ(cfg.pixel.metric, "l2");
  EXPECT_EQ(cfg.tabular.search.lambda.max_rounds, 3u);
  EXPECT_EQ(cfg.pixel.de.population, 20u);
  EXPECT_EQ(cfg.tabular.search.seed, 7u);
  EXPECT_EQ(cfg.pixel.search.seed, 7u);
  EXPECT_EQ(cfg.pixel.de.seed, 7u);
  EXPECT_THROW(experiment_config_from_json(ordered_json::parse(R"({"tabular": {}})")), ParseError);
}

TEST(Divide, ArmFailureNamesTheArm) {
  auto cfg = quick_config();
  cfg.pixel.model = kDataDir + "/missing_model.json";
  try {
    run_divide_experiment(cfg);
    FAIL();
  } catch (const ArmError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("pixel arm:", 0), 0u) << e.what();
    EXPECT_EQ(e.exit_code(), 3);
  }
}

TEST(Divide, BothArmsUseTheSameGenerator) {
  const auto cfg = quick_config();
  const auto before = generator_invocations().load();
  const auto report = run_divide_experiment(cfg);
  const auto calls = generator_invocations().load() - before;
  EXPECT_EQ(calls, report.tabular.stats.attempted + report.pixel.stats.attempted);
  EXPECT_GT(report.tabular.stats.attempted, 0u);
  EXPECT_GT(report.pixel.stats.attempted, 0u);
}

TEST(Divide, StatisticsRecomputeFromEmbeddedInstances) {
  const auto report = run_divide_experiment(quick_config());
  for (const auto* arm : {&report.tabular, &report.pixel}) {
    BatchStats copy = arm->stats;
    const auto metric = arm->metric_weights.empty() ? MetricSpec::l2() : MetricSpec::mad_l1(arm->metric_weights);
    summarize(copy, metric);
    EXPECT_EQ(copy.converged, arm->stats.converged);
    EXPECT_EQ(copy.success_rate, arm->stats.success_rate);
    EXPECT_EQ(copy.median_l0, arm->stats.median_l0);
    for (const auto& [name, s] : arm->stats.distances) {
      EXPECT_EQ(copy.distances.at(name).mean, s.mean) << name;
      EXPECT_EQ(copy.distances.at(name).median, s.median) << name;
    }
    for (const auto& inst : arm->stats.instances) {
      EXPECT_EQ(inst.result.l0_changed,
                count_changed(inst.input.values(), inst.result.counterfactual.values(), kDefaultL0Tolerance));
    }
  }
  const auto& c = report.comparison;
  ASSERT_TRUE(c.tabular_fraction_changed && c.pixel_fraction_changed);
  EXPECT_EQ(*c.tabular_fraction_changed, *report.tabular.stats.median_l0 / 4.0);
  EXPECT_EQ(*c.pixel_fraction_changed, *report.pixel.stats.median_l0 / 64.0);
}

TEST(Divide, ReportsAreDeterministicAndRoundTrip) {
  const auto cfg = quick_config();
  const auto a = scratch("a"), b = scratch("b"), c = scratch("c");
  emit_report(run_divide_experiment(cfg), a.string(), {ReportFormat::kJson, ReportFormat::kMarkdown});
  emit_report(run_divide_experiment(cfg), b.string(), {ReportFormat::kJson, ReportFormat::kMarkdown});
  for (const char* f : {"report.json", "report.md"}) {
    EXPECT_EQ(read_file((a / f).string()), read_file((b / f).string())) << f;
  }
  const auto json = read_file((a / "report.json").string());
  const auto parsed = parse_report_json(json);
  EXPECT_EQ(report_json_text(parsed), json);
  emit_report(parsed, c.string(), {ReportFormat::kMarkdown});
  EXPECT_EQ(read_file((c / "report.md").string()), read_file((a / "report.md").string()));
}

TEST(Divide, MarkdownEmbedsExplanationsVerbatim) {
  const auto report = run_divide_experiment(quick_config());
  const auto md = report_markdown(report);
  ASSERT_FALSE(report.tabular.samples.empty());
  for (const auto& e : report.tabular.samples) {
    EXPECT_NE(md.find("> " + e.text + "\n"), std::string::npos);
    EXPECT_EQ(e.text.rfind("You were denied a loan because your ", 0), 0u) << e.text;
  }
  for (const auto& e : report.pixel.samples) EXPECT_NE(md.find(e.text), std::string::npos);
  EXPECT_NE(md.find("| Arm | Metric | Dimensions |"), std::string::npos);
}

TEST(Divide, AllIdentityArmYieldsIdentitySentence) {
  const auto dir = scratch("identity");
  const auto loan = fixtures::loan_fixture(0);
  std::vector<Vector> rows;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < loan.data.size() && rows.size() < 10; ++i) {
    if (predict_index(loan.model, loan.data.row(i).values()) == 1) {
      rows.push_back(loan.data.row(i));
      labels.push_back(1);
    }
  }
  const Dataset offered(rows, labels, loan.data.feature_names());
  write_file((dir / "offered.csv").string(), dataset_to_csv(offered, kLoanLabels));
  auto cfg = quick_config();
  cfg.tabular.data = (dir / "offered.csv").string();
  const auto report = run_divide_experiment(cfg);
  EXPECT_EQ(report.tabular.stats.attempted, 0u);
  EXPECT_EQ(report.tabular.stats.skipped, rows.size());
  ASSERT_EQ(report.tabular.samples.size(), 1u);
  EXPECT_EQ(report.tabular.samples[0].text, "No change was required: the decision was already offered a loan.");
  EXPECT_FALSE(report.comparison.tabular_median_l0.has_value());
  const auto json = report_json_text(report);
  EXPECT_EQ(report_json_text(parse_report_json(json)), json);
  EXPECT_NE(report_markdown(report).find("No change was required"), std::string::npos);
}

TEST(Emit, UnwritableDirectoryIsIoError) {
  const auto dir = scratch("blocked");
  write_file((dir / "file").string(), "x");
  DivideReport r;
  try {
    emit_report(r, (dir / "file" / "sub").string(), {ReportFormat::kJson});
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.exit_code(), 3);
  }
}
