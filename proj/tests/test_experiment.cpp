#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "nnop/experiment.hpp"

using namespace nnop;

namespace {

std::string strip_runtime(const std::string& csv) {
  // drop the second-to-last column (runtime_ms) of every line
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    const auto last = line.rfind(',');
    const auto prev = line.rfind(',', last - 1);
    out += line.substr(0, prev) + line.substr(last) + "\n";
  }
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nnop_test_" + name);
}

} // namespace

TEST(TestFunctions, ReferenceShapes) {
  EXPECT_NEAR(smooth_test_function(0.5, 0.0), 1.0 + 0.125 * 0.0, 1e-15);
  EXPECT_NEAR(smooth_test_function(1.0, 1.0), 0.5, 1e-15);
  EXPECT_EQ(piecewise_test_function(0.1, 0.2), 1.0 - 2.0 * 0.02);
  EXPECT_EQ(piecewise_test_function(0.5, 0.6), 0.3);
  EXPECT_NEAR(piecewise_test_function(0.75, 0.1),
              std::sin(3.0 * std::numbers::pi) * std::cos(0.4 * std::numbers::pi), 1e-15);
  EXPECT_EQ(piecewise_test_function(0.5, 0.2), 0.0);
  EXPECT_EQ(parse_function("f2", 2).breakpoints, (std::vector<double>{0.4, 0.7}));
  const auto g = parse_function("x1*y + z", 3);
  const double p[3] = {2.0, 3.0, 5.0};
  EXPECT_EQ(g.fn(p), 11.0);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c;
  c.activation = "tanh";
  c.measure = "jacobi:0.5,0.5";
  c.function = "f2";
  c.n_list = {5, 10};
  c.p_list = {1.0, 2.0};
  c.breakpoints = {0.25};
  c.grading_levels = 12;
  c.resolution = 33;
  c.norm_measure = "lebesgue";
  c.output = "out.csv";
  c.threads = 3;
  EXPECT_EQ(config_from_json(to_json(c)), c);
  EXPECT_EQ(parse_config(to_json(c).dump(2)), c);
}

TEST(Config, ValidationMessagesNameTheField) {
  auto expect_field = [](const std::string& text, const std::string& field) {
    try {
      parse_config(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  expect_field(R"({"n_list": []})", "n_list");
  expect_field(R"({"n_list": [10, 5]})", "n_list");
  expect_field(R"({"n_list": [5], "p_list": [0.5]})", "p_list");
  expect_field(R"({"n_list": [5], "d": 3})", "function");
  expect_field(R"({"n_list": [5], "resolution": "high"})", "resolution");
  expect_field(R"({"n_list": [5], "colour": 1})", "colour");
  expect_field(R"({"n_list": [5], "quadrature": {"panel": 3}})", "quadrature.panel");
  expect_field(R"({"n_list": [5], "threads": 0})", "threads");
  EXPECT_THROW(parse_config("{not json"), ValidationError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST(Config, HashIgnoresThreadsAndOutput) {
  ExperimentConfig a;
  a.n_list = {4};
  ExperimentConfig b = a;
  b.threads = 8;
  b.output = "elsewhere.csv";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.resolution = 50;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Experiment, DeterministicAcrossThreadCounts) {
  ExperimentConfig c;
  c.measure = "jacobi:0.5,0.5";
  c.function = "f2";
  c.n_list = {4, 9};
  c.p_list = {1.0, 2.0};
  c.resolution = 41;
  c.panels = 16;
  const auto one = run_experiment(c);
  c.threads = 4;
  const auto four = run_experiment(c);
  EXPECT_EQ(strip_runtime(one.csv), strip_runtime(four.csv));
  EXPECT_EQ(one.csv.substr(0, one.csv.find('\n')), "n,sup_error,l1_error,lp_error_p=2,runtime_ms,config_hash");
  ASSERT_EQ(one.reports.size(), 2u);
  EXPECT_EQ(one.reports[0].lp_errors.size(), 2u);
}

TEST(Experiment, SingularMeasureGetsGradedQuadrature) {
  ExperimentConfig c;
  c.measure = "jacobi:0.5,0.5";
  c.n_list = {3};
  EXPECT_EQ(ExperimentSetup(c).plan.grading_levels, 20);
  c.grading_levels = 0;
  EXPECT_EQ(ExperimentSetup(c).plan.grading_levels, 0);
  c.measure = "lebesgue";
  c.grading_levels.reset();
  EXPECT_EQ(ExperimentSetup(c).plan.grading_levels, 0);
}

TEST(Experiment, GridDumpReproducesReportedSupError) {
  ExperimentConfig c;
  c.n_list = {6};
  c.resolution = 21;
  const auto path = temp_path("grid.txt");
  const auto g = grid_command(c, 6, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x y f Sf");
  double x, y, f, s, worst = 0.0;
  std::size_t rows = 0;
  while (in >> x >> y >> f >> s) {
    worst = std::max(worst, std::abs(f - s));
    ++rows;
  }
  EXPECT_EQ(rows, 21u * 21u);
  EXPECT_NEAR(worst, g.sup_error, 1e-12);
  const auto report = run_experiment(c).reports.at(0);
  EXPECT_NEAR(report.sup_error, g.sup_error, 1e-15);
  std::filesystem::remove(path);
  EXPECT_THROW(grid_command(c, 6, "/nonexistent/dir/grid.txt"), IoError);
}

TEST(Ratio, TableColumnsAndAsymptote) {
  const Kernel k(logistic_activation());
  const std::vector<int> ns{20, 40, 80};
  const auto rows = ratio_table(k, 0.5, ns);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.log_residual, std::log(r.ratio) - r.n * (0.25 - 0.5), 1e-12);
    EXPECT_LT(std::abs(r.log_residual), 0.05);
  }
  const std::string csv = ratio_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,ratio,log_residual");
  EXPECT_THROW(ratio_table(k, 1.5, ns), ValidationError);
  const Kernel custom(parse_activation("custom:0.5+0.5*tanh(x/2)"));
  EXPECT_TRUE(std::isnan(ratio_table(custom, 0.5, ns)[0].log_residual));
}

TEST(Tables, PresetsAreComplete) {
  for (int id = 1; id <= 6; ++id) {
    const auto& t = table_preset(id);
    EXPECT_EQ(t.l1_values.size(), table_n_list().size()) << id;
    if (t.has_sup) {
      EXPECT_EQ(t.sup_values.size(), table_n_list().size()) << id;
    }
    EXPECT_NO_THROW(table_config(id).validate());
  }
  EXPECT_THROW(table_preset(7), ValidationError);
}

TEST(Tables, DuplicatedRowsFlaggedOnlyInLaterTable) {
  // Table 3's L1 column for n >= 100 repeats Table 1 verbatim
  for (std::size_t row = 0; row < table_n_list().size(); ++row) {
    EXPECT_FALSE(duplicated_elsewhere(1, TableMetric::L1, row));
    EXPECT_EQ(duplicated_elsewhere(3, TableMetric::L1, row), table_n_list()[row] >= 100) << row;
  }
}
