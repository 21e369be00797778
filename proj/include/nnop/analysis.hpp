#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nnop/errors.hpp"
#include "nnop/measure.hpp"
#include "nnop/operator.hpp"
#include "nnop/summation.hpp"

namespace nnop {

/// Errors of one S_n run.
struct ErrorReport {
  int n = 0;
  double sup_error = 0.0;
  std::vector<std::pair<double, double>> lp_errors; // (p, value)
  double runtime_ms = 0.0;
  std::string fingerprint;

  double lp(double p) const {
    for (const auto& [q, v] : lp_errors)
      if (q == p)
        return v;
    throw PreconditionError("ErrorReport: no L^" + std::to_string(p) + " error recorded");
  }
};

/// Least-squares fit of log(error) = intercept + slope * log(n).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<int> n_values;
};

/// max over field nodes of |f(node) - field(node)|
inline double sup_error(const PointFunction& f, const Field& field) {
  double worst = 0.0;
  std::array<double, kMaxDimension> t{};
  for (std::size_t i = 0; i < field.size(); ++i) {
    field.node(i, t.data());
    worst = std::max(worst, std::abs(f(std::span<const double>(t.data(), field.d)) - field.values.data[i]));
  }
  return worst;
}

/// (int |f - approx|^p d rho)^(1/p) for arbitrary callables.
inline double lp_error(const PointFunction& f, const PointFunction& approx, double p, const Measure& measure,
                       const QuadraturePlan& plan = {}) {
  if (!(p >= 1.0))
    throw PreconditionError("lp_error: p must be at least 1");
  const double integral = integrate(
      [&](std::span<const double> t) { return std::pow(std::abs(f(t) - approx(t)), p); }, measure, plan);
  return std::pow(integral, 1.0 / p);
}

/// Node values of f and an approximation on the plan's tensor grid, with
/// the measure-weighted quadrature weights. Reused across several p.
struct NodeSamples {
  Tensor exact;
  Tensor approx;
  Tensor weights;
};

inline NodeSamples sample_operator_on_nodes(const PointFunction& f, const CoefficientTable& table,
                                            const OperatorConfig& cfg, const Measure& norm_measure,
                                            const QuadraturePlan& plan) {
  if (norm_measure.dim() != cfg.d)
    throw PreconditionError("lp_error: norm measure dimension mismatch");
  const AxisRule rule = plan.axis_rule();
  const std::size_t q = rule.size();
  NodeSamples s;
  s.exact = detail::sample_on_nodes(f, cfg.d, rule, cfg.threads);
  s.approx = evaluate_tensor(table, cfg, rule.nodes);
  s.weights = detail::sample_on_nodes([&](std::span<const double> t) { return norm_measure.density(t); }, cfg.d,
                                      rule, cfg.threads);
  for (std::size_t flat = 0; flat < s.weights.size(); ++flat) {
    double rho = s.weights.data[flat];
    if (rho < 0.0 || std::isnan(rho))
      throw MeasureIntegrityError("measure '" + norm_measure.name() + "' has negative density at a node");
    std::size_t rem = flat;
    for (int a = cfg.d - 1; a >= 0; --a) {
      rho *= rule.weights[rem % q];
      rem /= q;
    }
    s.weights.data[flat] = rho;
  }
  return s;
}

/// (sum_nodes w |a - b|^p)^(1/p) accumulated in ascending node order.
inline double lp_norm_of_difference(const Tensor& a, const Tensor* b, const Tensor& weights, double p) {
  if (!(p >= 1.0))
    throw PreconditionError("lp_error: p must be at least 1");
  StableSum acc;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (weights.data[i] == 0.0)
      continue;
    const double diff = std::abs(a.data[i] - (b ? b->data[i] : 0.0));
    acc += weights.data[i] * (p == 1.0 ? diff : std::pow(diff, p));
  }
  return std::pow(acc.get(), 1.0 / p);
}

/// ||f - S_n f||_{L^p(norm_measure)} via tensor evaluation of S_n on the
/// quadrature nodes.
inline double lp_error(const PointFunction& f, const CoefficientTable& table, const OperatorConfig& cfg, double p,
                       const Measure& norm_measure, const QuadraturePlan& plan) {
  const NodeSamples s = sample_operator_on_nodes(f, table, cfg, norm_measure, plan);
  return lp_norm_of_difference(s.exact, &s.approx, s.weights, p);
}

struct ContractionResult {
  double lhs = 0.0; // ||S_n f||
  double rhs = 0.0; // ||f||
  bool pass = false;
};

/// Compares ||S_n f||_{L^p(rho)} with ||f||_{L^p(rho)} on the config's
/// measure and quadrature.
inline ContractionResult contraction_check(const PointFunction& f, double p, const OperatorConfig& cfg) {
  const CoefficientTable table = coefficients(f, cfg);
  const NodeSamples s = sample_operator_on_nodes(f, table, cfg, *cfg.measure, cfg.plan);
  ContractionResult r;
  r.lhs = lp_norm_of_difference(s.approx, nullptr, s.weights, p);
  r.rhs = lp_norm_of_difference(s.exact, nullptr, s.weights, p);
  r.pass = r.lhs <= r.rhs * (1.0 + 1e-8);
  return r;
}

/// Slope of log(error) against log(n); nonpositive errors are dropped.
inline RateFit rate_fit(std::span<const int> ns, std::span<const double> errors) {
  if (ns.size() != errors.size())
    throw PreconditionError("rate_fit: size mismatch");
  std::vector<double> lx, ly;
  RateFit fit;
  for (std::size_t i = 0; i < ns.size(); ++i)
    if (std::find(ns.begin(), ns.begin() + i, ns[i]) != ns.begin() + i)
      throw PreconditionError("rate_fit: duplicate n=" + std::to_string(ns[i]));
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i]))
      continue;
    fit.n_values.push_back(ns[i]);
    lx.push_back(std::log(static_cast<double>(ns[i])));
    ly.push_back(std::log(errors[i]));
  }
  if (lx.size() < 3)
    throw PreconditionError("rate_fit: fewer than 3 usable points");
  const double m = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

enum class ErrorMetric { Sup, Lp };

/// Fit over a list of reports; `p` selects the L^p column when metric is Lp.
inline RateFit rate_fit(std::span<const ErrorReport> reports, ErrorMetric metric, double p = 1.0) {
  std::vector<int> ns;
  std::vector<double> errs;
  for (const auto& r : reports) {
    ns.push_back(r.n);
    errs.push_back(metric == ErrorMetric::Sup ? r.sup_error : r.lp(p));
  }
  return rate_fit(ns, errs);
}

} // namespace nnop
