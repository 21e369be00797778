#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnop/errors.hpp"
#include "nnop/expression.hpp"

namespace nnop {

enum class ActivationKind { Logistic, Tanh, Custom };

inline void require_finite(double x, const char* who) {
  if (!std::isfinite(x))
    throw DomainError(std::string(who) + ": non-finite argument");
}

inline double eval_logistic(double x) {
  require_finite(x, "logistic");
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double eval_tanh(double x) {
  require_finite(x, "tanh");
  return std::tanh(x);
}

/// A nondecreasing activation together with its limits at -inf/+inf.
///
/// `upper_gap(x)` is upper_limit - sigma(x) and `lower_gap(x)` is
/// sigma(x) - lower_limit. Built-in activations supply closed forms that stay
/// accurate deep in the tails, which the kernel relies on to avoid
/// cancellation in sigma(x+1) - sigma(x-1).
struct ActivationSpec {
  ActivationKind kind = ActivationKind::Custom;
  std::string tag;
  std::function<double(double)> eval;
  std::function<double(double)> upper_gap;
  std::function<double(double)> lower_gap;
  double lower_limit = 0.0;
  double upper_limit = 1.0;
  /// Polynomial tail exponent; empty means the tail decays faster than any
  /// power.
  std::optional<double> decay_exponent;

  double operator()(double x) const {
    require_finite(x, tag.c_str());
    return eval(x);
  }

  bool unit_limits() const { return lower_limit == 0.0 && upper_limit == 1.0; }
};

inline ActivationSpec logistic_activation() {
  ActivationSpec a;
  a.kind = ActivationKind::Logistic;
  a.tag = "logistic";
  a.eval = eval_logistic;
  a.upper_gap = [](double x) { return eval_logistic(-x); };
  a.lower_gap = [](double x) { return eval_logistic(x); };
  a.lower_limit = 0.0;
  a.upper_limit = 1.0;
  return a;
}

inline ActivationSpec tanh_activation() {
  ActivationSpec a;
  a.kind = ActivationKind::Tanh;
  a.tag = "tanh";
  a.eval = eval_tanh;
  // 1 - tanh(x) = 2 / (1 + e^{2x})
  a.upper_gap = [](double x) { return 2.0 * eval_logistic(-2.0 * x); };
  a.lower_gap = [](double x) { return 2.0 * eval_logistic(2.0 * x); };
  a.lower_limit = -1.0;
  a.upper_limit = 1.0;
  return a;
}

/// Wraps an arbitrary callable. Limits are estimated far out in both tails
/// unless given.
inline ActivationSpec custom_activation(std::string tag, std::function<double(double)> fn,
                                        std::optional<double> decay_exponent = std::nullopt,
                                        std::optional<std::pair<double, double>> limits = std::nullopt) {
  ActivationSpec a;
  a.kind = ActivationKind::Custom;
  a.tag = std::move(tag);
  a.eval = std::move(fn);
  if (limits) {
    a.lower_limit = limits->first;
    a.upper_limit = limits->second;
  } else {
    constexpr double far = 1e8;
    a.lower_limit = a.eval(-far);
    a.upper_limit = a.eval(far);
  }
  if (!std::isfinite(a.lower_limit) || !std::isfinite(a.upper_limit))
    throw ValidationError("activation '" + a.tag + "' has non-finite limits");
  a.upper_gap = [f = a.eval, u = a.upper_limit](double x) { return u - f(x); };
  a.lower_gap = [f = a.eval, l = a.lower_limit](double x) { return f(x) - l; };
  a.decay_exponent = decay_exponent;
  return a;
}

/// Parses "logistic", "tanh" or "custom:<expression in x>".
inline ActivationSpec parse_activation(std::string_view tag) {
  if (tag == "logistic")
    return logistic_activation();
  if (tag == "tanh")
    return tanh_activation();
  constexpr std::string_view prefix = "custom:";
  if (tag.starts_with(prefix)) {
    Expression expr(tag.substr(prefix.size()), {"x"});
    return custom_activation(std::string(tag), [expr](double x) { return expr(x); });
  }
  throw ValidationError("unknown activation '" + std::string(tag) +
                        "' (expected logistic, tanh or custom:<expr>)");
}

struct AssumptionReport {
  bool odd_symmetry = false;
  bool concave_right = false;  // checked on x >= 0
  bool tail_decay = false;
  bool monotone = false;
  bool non_unit_limits = false;
  double symmetry_residual = 0.0;
  double max_second_difference = 0.0;
  double fitted_decay_exponent = 0.0;
};

inline std::vector<double> symmetric_grid(double half_width, std::size_t points) {
  if (points < 2)
    throw PreconditionError("symmetric_grid: need at least 2 points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = -half_width + 2.0 * half_width * static_cast<double>(i) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points / 2; ++i)
    g[points - 1 - i] = -g[i];
  if (points % 2 == 1)
    g[points / 2] = 0.0;
  return g;
}

namespace detail {

// Least-squares slope of log(gap) against log(x) over [10, 40]. Returns +inf
// when the gap underflows to zero inside the window (faster than any power).
inline double fitted_tail_exponent(const std::function<double(double)>& gap) {
  constexpr int samples = 31;
  std::vector<double> lx, lg;
  for (int i = 0; i < samples; ++i) {
    const double x = 10.0 + 30.0 * i / (samples - 1);
    const double g = gap(x);
    if (!(g >= 0.0))
      return -std::numeric_limits<double>::infinity();
    if (g == 0.0) {
      if (i == 0)
        return -std::numeric_limits<double>::infinity();
      return std::numeric_limits<double>::infinity();
    }
    lx.push_back(std::log(x));
    lg.push_back(std::log(g));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += lg[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (lg[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return -sxy / sxx;
}

} // namespace detail

/// Numerically checks the standing assumptions on a sigmoidal activation over
/// a grid symmetric about zero.
inline AssumptionReport check_assumptions(const ActivationSpec& spec, std::span<const double> grid,
                                          double tol) {
  if (grid.size() < 100)
    throw PreconditionError("check_assumptions: grid needs at least 100 points");
  const std::size_t m = grid.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (std::abs(grid[i] + grid[m - 1 - i]) > 1e-12 * std::max(1.0, std::abs(grid[i])))
      throw PreconditionError("check_assumptions: grid is not symmetric about 0");
    if (i + 1 < m && !(grid[i + 1] > grid[i]))
      throw PreconditionError("check_assumptions: grid must be strictly increasing");
  }

  AssumptionReport r;
  r.non_unit_limits = !spec.unit_limits();

  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i)
    v[i] = spec(grid[i]);

  const double limit_sum = spec.lower_limit + spec.upper_limit;
  for (std::size_t i = 0; i < m; ++i)
    r.symmetry_residual = std::max(r.symmetry_residual, std::abs(v[i] + v[m - 1 - i] - limit_sum));
  r.odd_symmetry = r.symmetry_residual <= tol;

  r.monotone = true;
  for (std::size_t i = 0; i + 1 < m; ++i)
    if (v[i + 1] < v[i])
      r.monotone = false;

  r.max_second_difference = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < m; ++i) {
    if (grid[i] < 0.0)
      continue;
    const double h1 = grid[i] - grid[i - 1];
    const double h2 = grid[i + 1] - grid[i];
    const double h = 0.5 * (h1 + h2);
    const double d2 = h * ((v[i + 1] - v[i]) / h2 - (v[i] - v[i - 1]) / h1);
    r.max_second_difference = std::max(r.max_second_difference, d2);
  }
  r.concave_right = r.max_second_difference <= tol;

  if (spec.upper_limit > spec.lower_limit) {
    const double up = detail::fitted_tail_exponent(spec.upper_gap);
    const double down = detail::fitted_tail_exponent([&](double x) { return spec.lower_gap(-x); });
    r.fitted_decay_exponent = std::min(up, down);
    // a fit over a finite window sees the pre-asymptotic slope, e.g. 0.95 for
    // a gap of 1/(1+x), so the declared exponent gets 10% slack
    const double required = 0.9 * spec.decay_exponent.value_or(0.0);
    r.tail_decay = r.fitted_decay_exponent > 0.0 && r.fitted_decay_exponent >= required;
  } else {
    r.fitted_decay_exponent = 0.0;
    r.tail_decay = false;
  }
  return r;
}

} // namespace nnop
