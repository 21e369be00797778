#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "nnop/errors.hpp"

namespace nnop {

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// P_n(x) and P_n'(x) by the three-term recurrence
inline std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  if (n == 1)
    return {x, 1.0};
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

} // namespace detail

inline GaussRule compute_gauss_legendre(int order) {
  if (order < 1)
    throw PreconditionError("Gauss-Legendre order must be positive");
  GaussRule g;
  g.nodes.resize(order);
  g.weights.resize(order);
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = detail::legendre(order, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    const double dp = detail::legendre(order, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    g.nodes[i] = -x;
    g.nodes[order - 1 - i] = x;
    g.weights[i] = w;
    g.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1)
    g.nodes[order / 2] = 0.0;
  return g;
}

inline const GaussRule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(order);
  if (it == cache.end())
    it = cache.emplace(order, compute_gauss_legendre(order)).first;
  return it->second;
}

/// Nodes and weights of a one-dimensional composite rule.
struct AxisRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

/// Composite Gauss-Legendre layout for one axis of [0, 1].
///
/// Panel boundaries always include the registered breakpoints. With
/// `grading_levels > 0` the two end panels are split geometrically (ratio
/// 1/2) toward 0 and 1, which restores fast convergence for weights with
/// algebraic endpoint behavior such as t^a (1-t)^b.
struct QuadraturePlan {
  int panels_per_axis = 64;
  int nodes_per_panel = 8;
  std::vector<double> breakpoints;
  int grading_levels = 0;

  void validate() const {
    if (panels_per_axis < 1)
      throw ValidationError("quadrature: panels_per_axis must be positive");
    if (nodes_per_panel < 1 || nodes_per_panel > 64)
      throw ValidationError("quadrature: nodes_per_panel must lie in [1, 64]");
    if (grading_levels < 0 || grading_levels > 60)
      throw ValidationError("quadrature: grading_levels must lie in [0, 60]");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
      if (!(breakpoints[i] > 0.0 && breakpoints[i] < 1.0))
        throw ValidationError("quadrature: breakpoints must lie in (0, 1)");
      if (i > 0 && !(breakpoints[i] > breakpoints[i - 1]))
        throw ValidationError("quadrature: breakpoints must be strictly increasing");
    }
  }

  /// Panel boundaries for the sub-interval [lo, hi] of [0, 1]. Grading is
  /// applied only at ends that coincide with 0 or 1.
  std::vector<double> panel_boundaries(double lo = 0.0, double hi = 1.0) const {
    validate();
    if (!(hi > lo))
      throw PreconditionError("quadrature: empty interval");
    const double width = hi - lo;
    const int panels = std::max(1, static_cast<int>(std::ceil(panels_per_axis * width - 1e-9)));
    std::vector<double> b;
    b.reserve(panels + breakpoints.size() + 2 * grading_levels + 1);
    for (int i = 0; i <= panels; ++i)
      b.push_back(i == panels ? hi : lo + width * i / panels);
    for (double bp : breakpoints)
      if (bp > lo && bp < hi)
        b.push_back(bp);
    std::sort(b.begin(), b.end());
    // merge boundaries closer than a relative 1e-12
    std::vector<double> merged;
    for (double x : b)
      if (merged.empty() || x - merged.back() > 1e-12 * std::max(1.0, width))
        merged.push_back(x);
    merged.back() = hi;
    if (grading_levels > 0) {
      std::vector<double> graded;
      if (lo == 0.0 && merged.size() > 1) {
        const double h = merged[1];
        graded.push_back(0.0);
        for (int j = grading_levels; j >= 1; --j)
          graded.push_back(h * std::ldexp(1.0, -j));
        graded.insert(graded.end(), merged.begin() + 1, merged.end());
      } else {
        graded = merged;
      }
      if (hi == 1.0 && graded.size() > 1) {
        const double h = 1.0 - graded[graded.size() - 2];
        graded.pop_back();
        for (int j = 1; j <= grading_levels; ++j)
          graded.push_back(1.0 - h * std::ldexp(1.0, -j));
        graded.push_back(1.0);
      }
      merged = std::move(graded);
    }
    return merged;
  }

  AxisRule axis_rule(double lo = 0.0, double hi = 1.0) const {
    const auto bounds = panel_boundaries(lo, hi);
    const GaussRule& g = gauss_legendre(nodes_per_panel);
    AxisRule r;
    r.nodes.reserve((bounds.size() - 1) * g.nodes.size());
    r.weights.reserve(r.nodes.capacity());
    for (std::size_t p = 0; p + 1 < bounds.size(); ++p) {
      const double a = bounds[p], b = bounds[p + 1];
      const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        r.nodes.push_back(mid + half * g.nodes[i]);
        r.weights.push_back(half * g.weights[i]);
      }
    }
    return r;
  }
};

} // namespace nnop
