#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nnop/errors.hpp"
#include "nnop/expression.hpp"
#include "nnop/kernel.hpp"
#include "nnop/quadrature.hpp"
#include "nnop/summation.hpp"
#include "nnop/tensor.hpp"

namespace nnop {

inline constexpr int kMaxDimension = 3;

using PointFunction = std::function<double(std::span<const double>)>;
using AxisFunction = std::function<double(double)>;

inline void check_dimension(int d) {
  if (d < 1 || d > kMaxDimension)
    throw PreconditionError("dimension must lie in [1, 3], got " + std::to_string(d));
}

/// Nonnegative density w on [0,1]^d defining d rho = w dt. Product measures
/// also carry their per-axis factors so kernel integrals can be assembled
/// axis by axis.
class Measure {
public:
  /// Non-product measure from a joint density.
  Measure(std::string name, int dim, PointFunction density, const QuadraturePlan& mass_plan = {})
      : name_(std::move(name)), dim_(dim), density_(std::move(density)) {
    check_dimension(dim_);
    compute_mass(mass_plan);
  }

  /// Product measure; one factor per axis.
  Measure(std::string name, std::vector<AxisFunction> factors, const QuadraturePlan& mass_plan = {})
      : name_(std::move(name)), dim_(static_cast<int>(factors.size())), is_product_(true),
        axis_(std::move(factors)) {
    check_dimension(dim_);
    density_ = [axes = axis_](std::span<const double> t) {
      double w = 1.0;
      for (std::size_t i = 0; i < axes.size(); ++i)
        w *= axes[i](t[i]);
      return w;
    };
    compute_mass(mass_plan);
  }

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  bool is_product() const { return is_product_; }
  double total_mass() const { return total_mass_; }
  /// True when the density has algebraic endpoint behavior that plain
  /// composite Gauss rules resolve slowly.
  bool endpoint_singular() const { return endpoint_singular_; }
  void set_endpoint_singular(bool v) { endpoint_singular_ = v; }

  double density(std::span<const double> t) const { return density_(t); }

  double axis_density(int axis, double t) const {
    if (!is_product_)
      throw PreconditionError("axis_density: measure '" + name_ + "' is not a product measure");
    return axis_[axis](t);
  }

  const AxisFunction& axis_factor(int axis) const { return axis_.at(axis); }

private:
  void compute_mass(const QuadraturePlan& plan);

  std::string name_;
  int dim_ = 1;
  bool is_product_ = false;
  bool endpoint_singular_ = false;
  PointFunction density_;
  std::vector<AxisFunction> axis_;
  double total_mass_ = 0.0;
};

/// Integral of f * density over the box prod [lo_i, hi_i] by tensor
/// composite Gauss-Legendre. Terms are accumulated in ascending multi-index
/// order with compensation.
inline double integrate_box(const PointFunction& f, const Measure& measure, const QuadraturePlan& plan,
                            std::span<const double> lo, std::span<const double> hi) {
  const int d = measure.dim();
  if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d)
    throw PreconditionError("integrate: box dimension mismatch");
  std::array<AxisRule, kMaxDimension> rules;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) {
    rules[a] = plan.axis_rule(lo[a], hi[a]);
    total *= rules[a].size();
  }
  StableSum acc;
  std::array<std::size_t, kMaxDimension> idx{};
  std::array<double, kMaxDimension> point{};
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = rem % rules[a].size();
      rem /= rules[a].size();
      point[a] = rules[a].nodes[idx[a]];
      w *= rules[a].weights[idx[a]];
    }
    const std::span<const double> t(point.data(), d);
    const double rho = measure.density(t);
    if (rho < 0.0 || std::isnan(rho)) {
      std::ostringstream msg;
      msg << "measure '" << measure.name() << "' has density " << rho << " at node (";
      for (int a = 0; a < d; ++a)
        msg << (a ? ", " : "") << point[a];
      msg << ")";
      throw MeasureIntegrityError(msg.str());
    }
    if (rho == 0.0)
      continue;
    acc += f(t) * rho * w;
  }
  return acc.get();
}

/// Integral of f over [0,1]^d with respect to the measure.
inline double integrate(const PointFunction& f, const Measure& measure, const QuadraturePlan& plan = {}) {
  check_dimension(measure.dim());
  const std::array<double, kMaxDimension> lo{0.0, 0.0, 0.0};
  const std::array<double, kMaxDimension> hi{1.0, 1.0, 1.0};
  return integrate_box(f, measure, plan, std::span(lo.data(), measure.dim()),
                       std::span(hi.data(), measure.dim()));
}

inline void Measure::compute_mass(const QuadraturePlan& plan) {
  total_mass_ = integrate([](std::span<const double>) { return 1.0; }, *this, plan);
  if (!(total_mass_ > 0.0) || !std::isfinite(total_mass_))
    throw NumericGuardError("measure '" + name_ + "' has non-positive or non-finite total mass");
}

/// Plan used for a measure's own mass; graded when the density is
/// endpoint-singular.
inline QuadraturePlan mass_plan_for_jacobi() {
  QuadraturePlan p;
  p.grading_levels = 20;
  return p;
}

inline Measure lebesgue_measure(int d) {
  check_dimension(d);
  return Measure("lebesgue", std::vector<AxisFunction>(d, [](double) { return 1.0; }));
}

/// Product of t^a (1-t)^b factors; `exponents` holds (a, b) per axis.
inline Measure jacobi_measure(std::span<const double> exponents, std::string name = {}) {
  if (exponents.size() % 2 != 0 || exponents.empty())
    throw ValidationError("jacobi: need an (a, b) exponent pair per axis");
  std::vector<AxisFunction> axes;
  for (std::size_t i = 0; i < exponents.size(); i += 2) {
    const double a = exponents[i], b = exponents[i + 1];
    if (!(a > -1.0 && b > -1.0))
      throw ValidationError("jacobi: exponents must exceed -1");
    axes.push_back([a, b](double t) { return std::pow(t, a) * std::pow(1.0 - t, b); });
  }
  if (name.empty()) {
    std::ostringstream os;
    os << "jacobi:";
    for (std::size_t i = 0; i < exponents.size(); ++i)
      os << (i ? "," : "") << exponents[i];
    name = os.str();
  }
  Measure m(std::move(name), std::move(axes), mass_plan_for_jacobi());
  m.set_endpoint_singular(true);
  return m;
}

/// Parses "lebesgue", "jacobi:a,b[,c,d[,e,f]]" (one pair replicates to
/// every axis) or "density:<expression in t1..td>".
inline Measure parse_measure(std::string_view tag, int d) {
  check_dimension(d);
  if (tag == "lebesgue")
    return lebesgue_measure(d);
  if (tag.starts_with("jacobi:")) {
    std::vector<double> ex;
    std::string body(tag.substr(7));
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        ex.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos)
          throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ValidationError("jacobi: bad exponent '" + item + "'");
      }
    }
    if (ex.size() == 2 && d > 1) {
      const std::vector<double> pair = ex;
      for (int a = 1; a < d; ++a)
        ex.insert(ex.end(), pair.begin(), pair.end());
    }
    if (static_cast<int>(ex.size()) != 2 * d)
      throw ValidationError("jacobi: expected 2 or " + std::to_string(2 * d) + " exponents");
    return jacobi_measure(ex, std::string(tag));
  }
  if (tag.starts_with("density:")) {
    std::vector<std::string> vars;
    for (int a = 1; a <= d; ++a)
      vars.push_back("t" + std::to_string(a));
    Expression expr(tag.substr(8), vars);
    return Measure(std::string(tag), d, [expr](std::span<const double> t) { return expr(t); });
  }
  throw ValidationError("unknown measure '" + std::string(tag) +
                        "' (expected lebesgue, jacobi:..., or density:<expr>)");
}

/// Entry (q, k) = phi(n t_q - k) * w_q * axis_density(t_q); the density
/// factor is omitted when `axis_density` is empty.
inline Matrix axis_kernel_matrix(const Kernel& kernel, int n, const AxisRule& rule,
                                 const AxisFunction& axis_density = {}) {
  if (n < 1)
    throw PreconditionError("axis_kernel_matrix: n must be positive");
  Matrix m(rule.size(), static_cast<std::size_t>(n) + 1);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double t = rule.nodes[q];
    double w = rule.weights[q];
    if (axis_density) {
      const double rho = axis_density(t);
      if (rho < 0.0 || std::isnan(rho))
        throw MeasureIntegrityError("negative axis density at t=" + std::to_string(t));
      w *= rho;
    }
    for (int k = 0; k <= n; ++k)
      m(q, k) = kernel.phi(n * t - k) * w;
  }
  return m;
}

inline Matrix axis_kernel_matrix(const Kernel& kernel, int n, const QuadraturePlan& plan,
                                 const AxisFunction& axis_density = {}) {
  return axis_kernel_matrix(kernel, n, plan.axis_rule(), axis_density);
}

struct PositivityReport {
  double min_mass = std::numeric_limits<double>::infinity();
  std::vector<int> argmin;            // grid index attaining min_mass
  std::size_t boxes = 0;
  std::size_t failing_boxes = 0;
  double threshold = 0.0;
  bool pass = false;
};

/// Estimates rho(B) for the right-sided box of side delta^2 at every grid
/// point k/n of [0,1]^d. Boxes that would leave the cube are shifted back
/// inside so each has full side length.
inline PositivityReport positivity_probe(const Measure& measure, int n, double delta,
                                         const QuadraturePlan& plan = {}) {
  if (n < 1)
    throw PreconditionError("positivity_probe: n must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw PreconditionError("positivity_probe: delta must lie in (0, 1)");
  const int d = measure.dim();
  check_dimension(d);
  const double side = delta * delta;
  auto box_lo = [&](int k) { return std::min(static_cast<double>(k) / n, 1.0 - side); };

  PositivityReport rep;
  rep.threshold = 1e-12 * measure.total_mass();

  // per-axis masses when the measure factorizes
  std::vector<std::vector<double>> axis_mass;
  if (measure.is_product()) {
    axis_mass.resize(d);
    for (int a = 0; a < d; ++a) {
      Measure axis_measure("axis", std::vector<AxisFunction>{measure.axis_factor(a)}, plan);
      for (int k = 0; k <= n; ++k) {
        const double lo = box_lo(k), hi = lo + side;
        axis_mass[a].push_back(integrate_box([](std::span<const double>) { return 1.0; }, axis_measure,
                                             plan, std::span(&lo, 1), std::span(&hi, 1)));
      }
    }
  }

  std::size_t total = 1;
  for (int a = 0; a < d; ++a)
    total *= static_cast<std::size_t>(n) + 1;
  std::vector<int> idx(d);
  std::vector<double> lo(d), hi(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % (n + 1));
      rem /= n + 1;
    }
    double mass;
    if (measure.is_product()) {
      mass = 1.0;
      for (int a = 0; a < d; ++a)
        mass *= axis_mass[a][idx[a]];
    } else {
      for (int a = 0; a < d; ++a) {
        lo[a] = box_lo(idx[a]);
        hi[a] = lo[a] + side;
      }
      mass = integrate_box([](std::span<const double>) { return 1.0; }, measure, plan, lo, hi);
    }
    ++rep.boxes;
    if (!(mass > rep.threshold))
      ++rep.failing_boxes;
    if (mass < rep.min_mass) {
      rep.min_mass = mass;
      rep.argmin = idx;
    }
  }
  rep.pass = rep.failing_boxes == 0;
  return rep;
}

} // namespace nnop
