#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nnop/errors.hpp"
#include "nnop/kernel.hpp"
#include "nnop/measure.hpp"
#include "nnop/parallel.hpp"
#include "nnop/quadrature.hpp"
#include "nnop/summation.hpp"
#include "nnop/tensor.hpp"

namespace nnop {

/// Largest tensor (nodes, grid points, coefficients) the operator will
/// materialize.
inline constexpr double kTensorBudget = 6.0e7;
/// Largest (n+1)^d * nodes^d product the direct coefficient path accepts.
inline constexpr double kDirectBudget = 2.0e10;

/// One S_n instance: grid density n on [0,1]^d, kernel, measure and the
/// quadrature used for every integral against the measure.
struct OperatorConfig {
  int n = 1;
  int d = 1;
  std::shared_ptr<const Kernel> kernel;
  std::shared_ptr<const Measure> measure;
  QuadraturePlan plan;
  unsigned threads = 1;

  void validate() const {
    if (n < 1)
      throw PreconditionError("operator: n must be positive");
    check_dimension(d);
    if (!kernel || !measure)
      throw PreconditionError("operator: kernel and measure are required");
    if (measure->dim() != d)
      throw PreconditionError("operator: measure dimension " + std::to_string(measure->dim()) +
                              " does not match d=" + std::to_string(d));
    if (std::pow(n + 1.0, d) > 1e8)
      throw NumericGuardError("operator: (n+1)^d exceeds 1e8");
    plan.validate();
  }

  std::size_t lattice_size() const { return static_cast<std::size_t>(n) + 1; }
};

/// c_beta for every multi-index beta in {0..n}^d with the integrals that
/// produced them.
struct CoefficientTable {
  int n = 0;
  int d = 0;
  Tensor values;
  Tensor numerators;
  Tensor denominators;
  double min_value = 0.0;
  double max_value = 0.0;

  double at(std::span<const int> beta) const {
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a)
      flat = flat * (n + 1) + beta[a];
    return values.data[flat];
  }
};

namespace detail {

inline std::string format_index(std::span<const std::size_t> idx) {
  std::ostringstream os;
  os << "(";
  for (std::size_t a = 0; a < idx.size(); ++a)
    os << (a ? "," : "") << idx[a];
  os << ")";
  return os.str();
}

inline void guard_size(double count, const char* what) {
  if (count > kTensorBudget) {
    std::ostringstream os;
    os << what << ": " << count << " entries exceed the budget of " << kTensorBudget;
    throw NumericGuardError(os.str());
  }
}

/// f sampled on the tensor grid built from one axis rule.
inline Tensor sample_on_nodes(const PointFunction& f, int d, const AxisRule& rule, unsigned threads) {
  const std::size_t q = rule.size();
  guard_size(std::pow(static_cast<double>(q), d), "node tensor");
  Tensor out(std::vector<std::size_t>(d, q));
  parallel_for(0, out.size(), threads, [&](std::size_t flat) {
    std::array<double, kMaxDimension> t{};
    std::size_t rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      t[a] = rule.nodes[rem % q];
      rem /= q;
    }
    out.data[flat] = f(std::span<const double>(t.data(), d));
  });
  return out;
}

inline CoefficientTable finish_table(const OperatorConfig& cfg, Tensor num, Tensor den, double f_min,
                                     double f_max) {
  CoefficientTable t;
  t.n = cfg.n;
  t.d = cfg.d;
  const double floor = 1e-14 * cfg.measure->total_mass();
  t.values = Tensor(num.shape);
  std::vector<std::size_t> idx(cfg.d);
  for (std::size_t i = 0; i < num.size(); ++i) {
    if (!(den.data[i] > floor)) {
      num.unravel(i, idx.data());
      throw NumericGuardError("degenerate measure: denominator " + std::to_string(den.data[i]) +
                              " at beta=" + format_index(idx) + " is below 1e-14 * total mass");
    }
    // a weighted average of node values, so it lies in [f_min, f_max]
    t.values.data[i] = std::clamp(num.data[i] / den.data[i], f_min, f_max);
  }
  t.numerators = std::move(num);
  t.denominators = std::move(den);
  const auto [lo, hi] = std::minmax_element(t.values.data.begin(), t.values.data.end());
  t.min_value = *lo;
  t.max_value = *hi;
  return t;
}

} // namespace detail

/// Factorized assembly for product measures: the numerator contracts the
/// node-sampled f against one weighted kernel matrix per axis, and the
/// denominator is the outer product of the per-axis column sums.
inline CoefficientTable coefficients_factorized(const PointFunction& f, const OperatorConfig& cfg) {
  cfg.validate();
  if (!cfg.measure->is_product())
    throw PreconditionError("coefficients_factorized: measure is not a product measure");
  const AxisRule rule = cfg.plan.axis_rule();
  const Tensor samples = detail::sample_on_nodes(f, cfg.d, rule, cfg.threads);
  const auto [f_lo, f_hi] = std::minmax_element(samples.data.begin(), samples.data.end());

  std::vector<Matrix> weighted_t;
  std::vector<std::vector<double>> col_sums;
  for (int a = 0; a < cfg.d; ++a) {
    const Matrix m = axis_kernel_matrix(*cfg.kernel, cfg.n, rule, cfg.measure->axis_factor(a));
    std::vector<double> sums(m.cols);
    for (std::size_t k = 0; k < m.cols; ++k) {
      StableSum s;
      for (std::size_t q = 0; q < m.rows; ++q)
        s += m(q, k);
      sums[k] = s.get();
    }
    col_sums.push_back(std::move(sums));
    weighted_t.push_back(m.transposed());
  }
  std::vector<const Matrix*> ptrs;
  for (const auto& m : weighted_t)
    ptrs.push_back(&m);
  Tensor num = contract_all(samples, ptrs, cfg.threads);

  Tensor den(num.shape);
  std::vector<std::size_t> idx(cfg.d);
  for (std::size_t i = 0; i < den.size(); ++i) {
    den.unravel(i, idx.data());
    double v = 1.0;
    for (int a = 0; a < cfg.d; ++a)
      v *= col_sums[a][idx[a]];
    den.data[i] = v;
  }
  return detail::finish_table(cfg, std::move(num), std::move(den), *f_lo, *f_hi);
}

/// Direct per-index quadrature of both integrals with the joint density.
/// Cost is (n+1)^d * nodes^d.
inline CoefficientTable coefficients_direct(const PointFunction& f, const OperatorConfig& cfg) {
  cfg.validate();
  const int d = cfg.d;
  const AxisRule rule = cfg.plan.axis_rule();
  const std::size_t q = rule.size();
  const std::size_t lattice = cfg.lattice_size();
  if (std::pow(static_cast<double>(lattice) * q, d) > kDirectBudget)
    throw NumericGuardError("coefficients_direct: (n+1)^d * nodes^d exceeds budget");

  const Tensor samples = detail::sample_on_nodes(f, d, rule, cfg.threads);
  const auto [f_lo, f_hi] = std::minmax_element(samples.data.begin(), samples.data.end());
  const Measure& measure = *cfg.measure;
  Tensor weights = detail::sample_on_nodes(
      [&](std::span<const double> t) {
        const double rho = measure.density(t);
        if (rho < 0.0 || std::isnan(rho))
          throw MeasureIntegrityError("measure '" + measure.name() + "' has negative density at a node");
        return rho;
      },
      d, rule, cfg.threads);
  for (std::size_t flat = 0; flat < weights.size(); ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (int a = d - 1; a >= 0; --a) {
      w *= rule.weights[rem % q];
      rem /= q;
    }
    weights.data[flat] *= w;
  }
  // phi(n t_q - k) without quadrature weights, shared by every axis
  Matrix phis(q, lattice);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t k = 0; k < lattice; ++k)
      phis(i, k) = cfg.kernel->phi(cfg.n * rule.nodes[i] - static_cast<double>(k));

  Tensor num(std::vector<std::size_t>(d, lattice));
  Tensor den(num.shape);
  parallel_for(0, num.size(), cfg.threads, [&](std::size_t beta_flat) {
    std::array<std::size_t, kMaxDimension> beta{};
    num.unravel(beta_flat, beta.data());
    StableSum sn, sd;
    std::array<std::size_t, kMaxDimension> node{};
    for (std::size_t flat = 0; flat < samples.size(); ++flat) {
      std::size_t rem = flat;
      for (int a = d - 1; a >= 0; --a) {
        node[a] = rem % q;
        rem /= q;
      }
      double k = weights.data[flat];
      for (int a = 0; a < d && k != 0.0; ++a)
        k *= phis(node[a], beta[a]);
      if (k == 0.0)
        continue;
      sn += samples.data[flat] * k;
      sd += k;
    }
    num.data[beta_flat] = sn.get();
    den.data[beta_flat] = sd.get();
  });
  return detail::finish_table(cfg, std::move(num), std::move(den), *f_lo, *f_hi);
}

/// Coefficients c_beta = int f Phi(n t - beta) d rho / int Phi(n t - beta) d rho.
inline CoefficientTable coefficients(const PointFunction& f, const OperatorConfig& cfg) {
  return cfg.measure && cfg.measure->is_product() ? coefficients_factorized(f, cfg)
                                                   : coefficients_direct(f, cfg);
}

namespace detail {

/// Rows: phi(n x_r - k) / sum_k phi(n x_r - k).
inline Matrix normalized_kernel_rows(const Kernel& kernel, int n, std::span<const double> xs) {
  Matrix m(xs.size(), static_cast<std::size_t>(n) + 1);
  for (std::size_t r = 0; r < xs.size(); ++r) {
    StableSum s;
    for (int k = 0; k <= n; ++k) {
      m(r, k) = kernel.phi(n * xs[r] - k);
      s += m(r, k);
    }
    const double total = s.get();
    for (int k = 0; k <= n; ++k)
      m(r, k) /= total;
  }
  return m;
}

inline void check_in_cube(std::span<const double> x, int d) {
  if (static_cast<int>(x.size()) != d)
    throw PreconditionError("point has wrong dimension");
  for (double xi : x)
    if (!(xi >= 0.0 && xi <= 1.0))
      throw PreconditionError("point lies outside [0,1]^d");
}

} // namespace detail

/// S_n f(x) from precomputed coefficients.
inline double apply(const CoefficientTable& table, const OperatorConfig& cfg, std::span<const double> x) {
  detail::check_in_cube(x, cfg.d);
  if (table.n != cfg.n || table.d != cfg.d)
    throw PreconditionError("apply: table does not match config");
  Tensor t = table.values;
  for (int a = 0; a < cfg.d; ++a) {
    const Matrix row = detail::normalized_kernel_rows(*cfg.kernel, cfg.n, x.subspan(a, 1));
    t = mode_product(t, a, row);
  }
  return std::clamp(t.data[0], table.min_value, table.max_value);
}

/// Sample-based operator F_n: f(beta/n) in place of the coefficients.
inline double apply_classical(const PointFunction& f, const Kernel& kernel, int n, std::span<const double> x) {
  const int d = static_cast<int>(x.size());
  check_dimension(d);
  if (n < 1)
    throw PreconditionError("apply_classical: n must be positive");
  detail::check_in_cube(x, d);
  Tensor samples(std::vector<std::size_t>(d, static_cast<std::size_t>(n) + 1));
  std::array<std::size_t, kMaxDimension> idx{};
  std::array<double, kMaxDimension> point{};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples.unravel(i, idx.data());
    for (int a = 0; a < d; ++a)
      point[a] = static_cast<double>(idx[a]) / n;
    samples.data[i] = f(std::span<const double>(point.data(), d));
  }
  const auto [lo, hi] = std::minmax_element(samples.data.begin(), samples.data.end());
  const double f_min = *lo, f_max = *hi;
  for (int a = 0; a < d; ++a)
    samples = mode_product(samples, a, detail::normalized_kernel_rows(kernel, n, x.subspan(a, 1)));
  return std::clamp(samples.data[0], f_min, f_max);
}

/// S_n f on the tensor grid axis_points^d.
inline Tensor evaluate_tensor(const CoefficientTable& table, const OperatorConfig& cfg,
                              std::span<const double> axis_points) {
  if (table.n != cfg.n || table.d != cfg.d)
    throw PreconditionError("evaluate: table does not match config");
  detail::guard_size(std::pow(static_cast<double>(axis_points.size()), cfg.d), "evaluation grid");
  const Matrix rows = detail::normalized_kernel_rows(*cfg.kernel, cfg.n, axis_points);
  std::vector<const Matrix*> ptrs(cfg.d, &rows);
  Tensor out = contract_all(table.values, ptrs, cfg.threads);
  for (double& v : out.data)
    v = std::clamp(v, table.min_value, table.max_value);
  return out;
}

/// Values on a uniform grid of [0,1]^d including both endpoints.
struct Field {
  int d = 0;
  int resolution = 0;
  std::vector<double> axis;
  Tensor values;

  std::size_t size() const { return values.size(); }

  void node(std::size_t flat, double* out) const {
    const std::size_t r = static_cast<std::size_t>(resolution);
    for (int a = d - 1; a >= 0; --a) {
      out[a] = axis[flat % r];
      flat /= r;
    }
  }
};

inline std::vector<double> uniform_axis(int resolution) {
  std::vector<double> axis(resolution);
  for (int i = 0; i < resolution; ++i)
    axis[i] = static_cast<double>(i) / (resolution - 1);
  axis.back() = 1.0;
  return axis;
}

/// Budget on resolution^d * (n+1)^d for grid evaluation.
inline constexpr double kGridWorkBudget = 1.0e13;

inline Field evaluate_grid(const CoefficientTable& table, const OperatorConfig& cfg, int resolution) {
  if (resolution < 2)
    throw PreconditionError("evaluate_grid: resolution must be at least 2");
  const double work = std::pow(static_cast<double>(resolution) * (cfg.n + 1.0), cfg.d);
  if (work > kGridWorkBudget)
    throw NumericGuardError("evaluate_grid: resolution^d * (n+1)^d exceeds the work budget");
  Field field;
  field.d = cfg.d;
  field.resolution = resolution;
  field.axis = uniform_axis(resolution);
  field.values = evaluate_tensor(table, cfg, field.axis);
  return field;
}

} // namespace nnop
