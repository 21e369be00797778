#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnop/activation.hpp"
#include "nnop/analysis.hpp"
#include "nnop/errors.hpp"
#include "nnop/expression.hpp"
#include "nnop/kernel.hpp"
#include "nnop/measure.hpp"
#include "nnop/operator.hpp"

namespace nnop {

// ---------------------------------------------------------------------------
// Test functions

struct TestFunction {
  std::string tag;
  int arity = 2;
  PointFunction fn;
  /// Jump locations, registered as quadrature breakpoints on every axis.
  std::vector<double> breakpoints;
};

/// sin(pi x) cos(pi y) + x^2 y / 2
inline double smooth_test_function(double x, double y) {
  return std::sin(std::numbers::pi * x) * std::cos(std::numbers::pi * y) + 0.5 * x * x * y;
}

/// Piecewise test function with jumps along x, y in {0.4, 0.7}. Points not
/// covered by any of the three pieces map to 0.
inline double piecewise_test_function(double x, double y) {
  if (x < 0.4 && y < 0.4)
    return 1.0 - 2.0 * x * y;
  if (x >= 0.4 && x < 0.7 && y >= 0.4 && y < 0.7)
    return 0.3;
  if (x >= 0.7 || y >= 0.7)
    return std::sin(4.0 * std::numbers::pi * x) * std::cos(4.0 * std::numbers::pi * y);
  return 0.0;
}

/// "f1", "f2", or an expression in x1..xd (x, y, z also accepted).
inline TestFunction parse_function(const std::string& tag, int d) {
  check_dimension(d);
  TestFunction tf;
  tf.tag = tag;
  if (tag == "f1") {
    tf.arity = 2;
    tf.fn = [](std::span<const double> t) { return smooth_test_function(t[0], t[1]); };
  } else if (tag == "f2") {
    tf.arity = 2;
    tf.fn = [](std::span<const double> t) { return piecewise_test_function(t[0], t[1]); };
    tf.breakpoints = {0.4, 0.7};
  } else {
    std::vector<std::string> vars;
    for (int a = 1; a <= d; ++a)
      vars.push_back("x" + std::to_string(a));
    const char* aliases[] = {"x", "y", "z"};
    for (int a = 0; a < d; ++a)
      vars.push_back(aliases[a]);
    Expression expr(tag, vars);
    tf.arity = d;
    tf.fn = [expr, d](std::span<const double> t) {
      std::array<double, 2 * kMaxDimension> v{};
      for (int a = 0; a < d; ++a)
        v[a] = v[d + a] = t[a];
      return expr(std::span<const double>(v.data(), 2 * d));
    };
  }
  return tf;
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  std::string activation = "logistic";
  std::string measure = "lebesgue";
  std::string function = "f1";
  std::vector<int> n_list;
  std::vector<double> p_list{1.0};
  int d = 2;
  int panels = 64;
  int nodes = 8;
  std::vector<double> breakpoints;
  /// Empty: 20 levels when a measure is endpoint-singular, else 0.
  std::optional<int> grading_levels;
  int resolution = 201;
  /// Measure used in the L^p norms; empty means `measure`.
  std::optional<std::string> norm_measure;
  std::string output;
  unsigned threads = 1;

  bool operator==(const ExperimentConfig&) const = default;

  void validate() const {
    if (n_list.empty())
      throw ValidationError("config field 'n_list': must be nonempty");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      if (n_list[i] < 1)
        throw ValidationError("config field 'n_list': entries must be positive");
      if (i > 0 && n_list[i] <= n_list[i - 1])
        throw ValidationError("config field 'n_list': must be strictly ascending");
    }
    if (p_list.empty())
      throw ValidationError("config field 'p_list': must be nonempty");
    for (double p : p_list)
      if (!(p >= 1.0) || !std::isfinite(p))
        throw ValidationError("config field 'p_list': every p must be finite and >= 1");
    if (d < 1 || d > kMaxDimension)
      throw ValidationError("config field 'd': must lie in [1, 3]");
    if (resolution < 2)
      throw ValidationError("config field 'resolution': must be at least 2");
    if (threads < 1)
      throw ValidationError("config field 'threads': must be positive");
    const TestFunction tf = parse_function(function, d);
    if (tf.arity != d)
      throw ValidationError("config field 'function': '" + function + "' takes " + std::to_string(tf.arity) +
                            " variables but d=" + std::to_string(d));
    make_plan(tf).validate();
  }

  QuadraturePlan make_plan(const TestFunction& tf) const {
    QuadraturePlan plan;
    plan.panels_per_axis = panels;
    plan.nodes_per_panel = nodes;
    plan.breakpoints = breakpoints;
    for (double b : tf.breakpoints)
      plan.breakpoints.push_back(b);
    std::sort(plan.breakpoints.begin(), plan.breakpoints.end());
    plan.breakpoints.erase(std::unique(plan.breakpoints.begin(), plan.breakpoints.end()), plan.breakpoints.end());
    plan.grading_levels = grading_levels.value_or(0);
    return plan;
  }

  const std::string& norm_measure_tag() const { return norm_measure ? *norm_measure : measure; }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["activation"] = c.activation;
  j["measure"] = c.measure;
  j["function"] = c.function;
  j["n_list"] = c.n_list;
  j["p_list"] = c.p_list;
  j["d"] = c.d;
  nlohmann::json q;
  q["panels"] = c.panels;
  q["nodes"] = c.nodes;
  q["breakpoints"] = c.breakpoints;
  if (c.grading_levels)
    q["grading_levels"] = *c.grading_levels;
  j["quadrature"] = q;
  j["resolution"] = c.resolution;
  if (c.norm_measure)
    j["norm_measure"] = *c.norm_measure;
  if (!c.output.empty())
    j["output"] = c.output;
  j["threads"] = c.threads;
  return j;
}

namespace detail {

template <typename T>
T get_field(const nlohmann::json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config field '" + path + key + "': " + e.what());
  }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                           const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      ok = ok || it.key() == k;
    if (!ok)
      throw ValidationError("config field '" + path + it.key() + "': unknown key");
  }
}

} // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw ValidationError("config: top level must be an object");
  detail::reject_unknown(j,
                         {"activation", "measure", "function", "n_list", "p_list", "d", "quadrature",
                          "resolution", "norm_measure", "output", "threads"},
                         "");
  ExperimentConfig c;
  using detail::get_field;
  if (j.contains("activation")) c.activation = get_field<std::string>(j, "activation", "");
  if (j.contains("measure")) c.measure = get_field<std::string>(j, "measure", "");
  if (j.contains("function")) c.function = get_field<std::string>(j, "function", "");
  c.n_list = get_field<std::vector<int>>(j, "n_list", "");
  if (j.contains("p_list")) c.p_list = get_field<std::vector<double>>(j, "p_list", "");
  if (j.contains("d")) c.d = get_field<int>(j, "d", "");
  if (j.contains("quadrature")) {
    const auto& q = j.at("quadrature");
    if (!q.is_object())
      throw ValidationError("config field 'quadrature': must be an object");
    detail::reject_unknown(q, {"panels", "nodes", "breakpoints", "grading_levels"}, "quadrature.");
    if (q.contains("panels")) c.panels = get_field<int>(q, "panels", "quadrature.");
    if (q.contains("nodes")) c.nodes = get_field<int>(q, "nodes", "quadrature.");
    if (q.contains("breakpoints")) c.breakpoints = get_field<std::vector<double>>(q, "breakpoints", "quadrature.");
    if (q.contains("grading_levels")) c.grading_levels = get_field<int>(q, "grading_levels", "quadrature.");
  }
  if (j.contains("resolution")) c.resolution = get_field<int>(j, "resolution", "");
  if (j.contains("norm_measure")) c.norm_measure = get_field<std::string>(j, "norm_measure", "");
  if (j.contains("output")) c.output = get_field<std::string>(j, "output", "");
  if (j.contains("threads")) {
    const int t = get_field<int>(j, "threads", "");
    if (t < 1)
      throw ValidationError("config field 'threads': must be positive");
    c.threads = static_cast<unsigned>(t);
  }
  c.validate();
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

/// FNV-1a over the canonical JSON of every field that affects results
/// (thread count and output path excluded).
inline std::string config_hash(const ExperimentConfig& c) {
  nlohmann::json j = to_json(c);
  j.erase("threads");
  j.erase("output");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Running

/// Everything needed to build S_n for any n of a config.
struct ExperimentSetup {
  ExperimentConfig config;
  TestFunction function;
  std::shared_ptr<const Kernel> kernel;
  std::shared_ptr<const Measure> measure;
  std::shared_ptr<const Measure> norm_measure;
  QuadraturePlan plan;

  explicit ExperimentSetup(ExperimentConfig c) : config(std::move(c)) {
    config.validate();
    function = parse_function(config.function, config.d);
    kernel = std::make_shared<const Kernel>(parse_activation(config.activation));
    measure = std::make_shared<const Measure>(parse_measure(config.measure, config.d));
    norm_measure = config.norm_measure_tag() == config.measure
                       ? measure
                       : std::make_shared<const Measure>(parse_measure(config.norm_measure_tag(), config.d));
    plan = config.make_plan(function);
    if (!config.grading_levels && (measure->endpoint_singular() || norm_measure->endpoint_singular()))
      plan.grading_levels = 20;
  }

  OperatorConfig operator_config(int n) const {
    OperatorConfig oc;
    oc.n = n;
    oc.d = config.d;
    oc.kernel = kernel;
    oc.measure = measure;
    oc.plan = plan;
    oc.threads = config.threads;
    return oc;
  }
};

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

inline std::string format_p(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

struct ExperimentResult {
  std::vector<ErrorReport> reports;
  std::string csv;
};

inline std::string csv_header(const ExperimentConfig& c) {
  std::string h = "n,sup_error,l1_error";
  for (double p : c.p_list)
    if (p != 1.0)
      h += ",lp_error_p=" + format_p(p);
  return h + ",runtime_ms,config_hash\n";
}

inline std::string csv_row(const ExperimentConfig& c, const ErrorReport& r) {
  std::string row = std::to_string(r.n) + "," + format_real(r.sup_error) + "," + format_real(r.lp(1.0));
  for (double p : c.p_list)
    if (p != 1.0)
      row += "," + format_real(r.lp(p));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", r.runtime_ms);
  return row + "," + buf + "," + r.fingerprint + "\n";
}

/// One sweep point: coefficients, grid sup error, and every L^p error.
inline ErrorReport run_single(const ExperimentSetup& setup, int n, std::ostream* log = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  const OperatorConfig oc = setup.operator_config(n);
  const CoefficientTable table = coefficients(setup.function.fn, oc);
  const Field field = evaluate_grid(table, oc, setup.config.resolution);
  ErrorReport r;
  r.n = n;
  r.sup_error = sup_error(setup.function.fn, field);
  const NodeSamples s = sample_operator_on_nodes(setup.function.fn, table, oc, *setup.norm_measure, setup.plan);
  std::vector<double> ps{1.0};
  for (double p : setup.config.p_list)
    if (p != 1.0)
      ps.push_back(p);
  for (double p : ps)
    r.lp_errors.emplace_back(p, lp_norm_of_difference(s.exact, &s.approx, s.weights, p));
  if (log && setup.norm_measure->name() != "lebesgue") {
    const Measure flat = lebesgue_measure(setup.config.d);
    const NodeSamples u = sample_operator_on_nodes(setup.function.fn, table, oc, flat, setup.plan);
    *log << "# n=" << n << " norm=" << setup.norm_measure->name() << " weighted_l1=" << format_real(r.lp(1.0))
         << " unweighted_l1=" << format_real(lp_norm_of_difference(u.exact, &u.approx, u.weights, 1.0))
         << " norm_mass=" << format_real(setup.norm_measure->total_mass()) << "\n";
  }
  r.fingerprint = config_hash(setup.config);
  r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr) {
  const ExperimentSetup setup(config);
  ExperimentResult res;
  res.csv = csv_header(setup.config);
  for (int n : setup.config.n_list) {
    res.reports.push_back(run_single(setup, n, log));
    res.csv += csv_row(setup.config, res.reports.back());
  }
  return res;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out)
    throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Grid dumps

/// Header line, then one row per grid node: coordinates, f, S_n f.
inline std::string grid_dump(const PointFunction& f, const Field& field) {
  static const char* names[] = {"x", "y", "z"};
  std::string out;
  for (int a = 0; a < field.d; ++a)
    out += std::string(names[a]) + " ";
  out += "f Sf\n";
  std::array<double, kMaxDimension> t{};
  char buf[64];
  for (std::size_t i = 0; i < field.size(); ++i) {
    field.node(i, t.data());
    for (int a = 0; a < field.d; ++a) {
      std::snprintf(buf, sizeof buf, "%.17g ", t[a]);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", f(std::span<const double>(t.data(), field.d)),
                  field.values.data[i]);
    out += buf;
  }
  return out;
}

struct GridResult {
  Field field;
  double sup_error = 0.0;
};

inline GridResult grid_command(const ExperimentConfig& config, int n, const std::string& path) {
  const ExperimentSetup setup(config);
  const OperatorConfig oc = setup.operator_config(n);
  const CoefficientTable table = coefficients(setup.function.fn, oc);
  GridResult g;
  g.field = evaluate_grid(table, oc, setup.config.resolution);
  g.sup_error = sup_error(setup.function.fn, g.field);
  write_text_file(path, grid_dump(setup.function.fn, g.field));
  return g;
}

// ---------------------------------------------------------------------------
// Hypothesis ratio and moments

struct RatioRow {
  int n = 0;
  double ratio = 0.0;
  /// log(ratio) minus the leading exponential asymptote; NaN when unknown.
  double log_residual = 0.0;
};

/// Leading exponent of the ratio for built-in activations: n(d^2 - d) for
/// logistic, 2n(d^2 - d) for tanh.
inline std::optional<double> ratio_asymptote(const ActivationSpec& a, int n, double delta) {
  switch (a.kind) {
  case ActivationKind::Logistic: return n * (delta * delta - delta);
  case ActivationKind::Tanh: return 2.0 * n * (delta * delta - delta);
  default: return std::nullopt;
  }
}

inline std::vector<RatioRow> ratio_table(const Kernel& kernel, double delta, std::span<const int> ns) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ValidationError("ratio: delta must lie in (0, 1)");
  std::vector<RatioRow> rows;
  for (int n : ns) {
    RatioRow r;
    r.n = n;
    r.ratio = kernel.ratio_condition(n, delta);
    const auto asym = ratio_asymptote(kernel.activation(), n, delta);
    r.log_residual = asym ? std::log(r.ratio) - *asym : std::nan("");
    rows.push_back(r);
  }
  return rows;
}

inline std::string ratio_csv(std::span<const RatioRow> rows) {
  std::string out = "n,ratio,log_residual\n";
  for (const auto& r : rows)
    out += std::to_string(r.n) + "," + format_real(r.ratio) + "," +
           (std::isnan(r.log_residual) ? std::string() : format_real(r.log_residual)) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Reference-table presets

enum class TableMetric { Sup, L1 };

struct TablePreset {
  int id = 0;
  std::string activation;
  std::string measure;
  std::string function;
  bool has_sup = false;
  std::vector<double> sup_values;
  std::vector<double> l1_values;
  double tolerance = 0.1;
};

inline const std::vector<int>& table_n_list() {
  static const std::vector<int> ns{10, 20, 40, 60, 80, 100, 120, 140, 160, 180};
  return ns;
}

inline const std::vector<TablePreset>& table_presets() {
  static const std::vector<TablePreset> presets{
      {1, "logistic", "lebesgue", "f1", true,
       {0.6140847, 0.4217103, 0.2318002, 0.1577081, 0.1192026, 0.09571101, 0.07990336, 0.06854284, 0.05998377,
        0.05330224},
       {0.18006860, 0.07929577, 0.02551001, 0.01215602, 0.00706165, 0.00460772, 0.00324348, 0.00240865,
        0.00186214, 0.00148396},
       0.10},
      {2, "tanh", "lebesgue", "f1", true,
       {0.4537, 0.2536, 0.1310, 0.0879, 0.0660, 0.05277893, 0.04389374, 0.03751111, 0.03269716, 0.02893381},
       {0.0936, 0.0312, 0.0088, 0.0040, 0.0023, 0.00150571, 0.00106091, 0.00078993, 0.00061305, 0.00049172},
       0.10},
      {3, "logistic", "lebesgue", "f2", false, {},
       {0.34143, 0.26699, 0.15767, 0.10089, 0.07069, 0.00460772, 0.00324348, 0.00240865, 0.00186214, 0.00148396},
       0.15},
      {4, "tanh", "lebesgue", "f2", false, {},
       {0.28442, 0.17863, 0.08282, 0.04929, 0.03390, 0.02538742, 0.02004754, 0.01640804, 0.01377641,
        0.01179791},
       0.15},
      {5, "logistic", "jacobi:0.5,0.5,0.5,0.5", "f2", false, {},
       {0.050147, 0.040254, 0.024157, 0.015721, 0.011188, 0.008522, 0.006810, 0.005629, 0.004773, 0.004126},
       0.15},
      {6, "tanh", "jacobi:0.5,0.5,0.5,0.5", "f2", false, {},
       {0.042775, 0.027303, 0.013046, 0.007969, 0.005590, 0.004245, 0.003391, 0.002803, 0.002371, 0.002040},
       0.15},
  };
  return presets;
}

inline const TablePreset& table_preset(int id) {
  for (const auto& p : table_presets())
    if (p.id == id)
      return p;
  throw ValidationError("table id must lie in 1..6, got " + std::to_string(id));
}

inline ExperimentConfig table_config(int id) {
  const TablePreset& p = table_preset(id);
  ExperimentConfig c;
  c.activation = p.activation;
  c.measure = p.measure;
  c.function = p.function;
  c.n_list = table_n_list();
  c.d = 2;
  return c;
}

/// True when a reference value duplicates an earlier table's entry at the
/// same n, which marks it as a copy error rather than a result.
inline bool duplicated_elsewhere(int table_id, TableMetric metric, std::size_t row) {
  const TablePreset& self = table_preset(table_id);
  const double v = metric == TableMetric::Sup ? self.sup_values[row] : self.l1_values[row];
  for (const auto& other : table_presets()) {
    if (other.id >= table_id)
      continue;
    if (row < other.l1_values.size() && other.l1_values[row] == v)
      return true;
    if (row < other.sup_values.size() && other.sup_values[row] == v)
      return true;
  }
  return false;
}

struct TableRow {
  int n = 0;
  TableMetric metric = TableMetric::L1;
  double reference = 0.0;
  double computed = 0.0;
  double relative_deviation = 0.0;
  bool erratum_suspect = false;
  bool pass = false;
};

struct TableOutcome {
  int id = 0;
  double tolerance = 0.0;
  std::vector<TableRow> rows;
  std::vector<ErrorReport> reports;
  bool all_scored_pass = true;
};

/// Runs a preset over `ns` (default: all ten rows) and compares against the
/// reference values at the preset tolerance. `overrides` may adjust threads,
/// resolution and quadrature.
inline TableOutcome run_table(int id, std::optional<std::vector<int>> ns = std::nullopt,
                              const std::function<void(ExperimentConfig&)>& overrides = {},
                              std::ostream* log = nullptr) {
  const TablePreset& preset = table_preset(id);
  ExperimentConfig cfg = table_config(id);
  if (ns)
    cfg.n_list = *ns;
  if (overrides)
    overrides(cfg);
  const ExperimentSetup setup(cfg);
  TableOutcome out;
  out.id = id;
  out.tolerance = preset.tolerance;
  const auto& all_n = table_n_list();
  for (int n : setup.config.n_list) {
    const auto it = std::find(all_n.begin(), all_n.end(), n);
    if (it == all_n.end())
      throw ValidationError("table " + std::to_string(id) + " has no row for n=" + std::to_string(n));
    const std::size_t row = static_cast<std::size_t>(it - all_n.begin());
    const ErrorReport rep = run_single(setup, n, log);
    out.reports.push_back(rep);
    auto add = [&](TableMetric m, double reference, double computed) {
      TableRow r;
      r.n = n;
      r.metric = m;
      r.reference = reference;
      r.computed = computed;
      r.relative_deviation = std::abs(computed - reference) / std::abs(reference);
      r.erratum_suspect = duplicated_elsewhere(id, m, row);
      r.pass = r.relative_deviation <= preset.tolerance;
      if (!r.erratum_suspect && !r.pass)
        out.all_scored_pass = false;
      out.rows.push_back(r);
    };
    if (preset.has_sup)
      add(TableMetric::Sup, preset.sup_values[row], rep.sup_error);
    add(TableMetric::L1, preset.l1_values[row], rep.lp(1.0));
  }
  return out;
}

inline std::string table_csv(const TableOutcome& t) {
  std::string out = "n,metric,reference,computed,rel_deviation,status\n";
  for (const auto& r : t.rows) {
    const char* status = r.erratum_suspect ? "ERRATUM-SUSPECT" : (r.pass ? "PASS" : "FAIL");
    char dev[32];
    std::snprintf(dev, sizeof dev, "%.4f", r.relative_deviation);
    out += std::to_string(r.n) + "," + (r.metric == TableMetric::Sup ? "sup" : "l1") + "," +
           format_real(r.reference) + "," + format_real(r.computed) + "," + dev + "," + status + "\n";
  }
  return out;
}

} // namespace nnop
