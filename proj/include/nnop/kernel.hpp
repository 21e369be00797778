#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "nnop/activation.hpp"
#include "nnop/errors.hpp"
#include "nnop/summation.hpp"

namespace nnop {

struct MomentEstimate {
  double value = 0.0;
  /// |M_r(2K) - M_r(K)|, K the tail cutoff.
  double tail_residual = 0.0;
  bool diverges = false;
  /// Set when the declared decay exponent alone rules out a finite moment.
  bool excluded_by_decay = false;
};

/// The bell-shaped density phi(x) = (sigma(x+1) - sigma(x-1)) / 2 induced by
/// an activation, with its lattice-sum constant measured once at
/// construction. Immutable afterwards.
class Kernel {
public:
  static constexpr int kDefaultTailCutoff = 200;

  explicit Kernel(ActivationSpec activation, int tail_cutoff = kDefaultTailCutoff)
      : activation_(std::move(activation)), tail_cutoff_(tail_cutoff) {
    if (tail_cutoff_ < 1)
      throw PreconditionError("Kernel: tail_cutoff must be positive");
    partition_constant_ = partition_sum(0.0);
    // lattice sums are 1-periodic, so [0, 1] covers every x
    for (int i = 0; i < 1000; ++i) {
      const double x = i / 999.0;
      partition_deviation_ = std::max(partition_deviation_, std::abs(partition_sum(x) - partition_constant_));
    }
    tail_converged_ = std::abs(lattice_sum(0.0, 2 * tail_cutoff_) - partition_constant_) <= 1e-10;
    shape_verified_ = verify_shape();
  }

  const ActivationSpec& activation() const { return activation_; }
  int tail_cutoff() const { return tail_cutoff_; }
  double partition_constant() const { return partition_constant_; }
  /// max over 1000 points of [0,1] of |partition_sum(x) - partition_constant|
  double partition_deviation() const { return partition_deviation_; }
  bool tail_converged() const { return tail_converged_; }
  /// Nonnegative, even and nonincreasing on x >= 0 over a 10^4 point grid.
  bool shape_verified() const { return shape_verified_; }

  double phi(double x) const {
    require_finite(x, "phi");
    double v;
    if (x >= 0.0)
      v = 0.5 * (activation_.upper_gap(x - 1.0) - activation_.upper_gap(x + 1.0));
    else
      v = 0.5 * (activation_.lower_gap(x + 1.0) - activation_.lower_gap(x - 1.0));
    return v > 0.0 ? v : 0.0;
  }

  double phi_product(std::span<const double> x) const {
    if (x.empty())
      throw PreconditionError("phi_product: empty point");
    double p = 1.0;
    for (double xi : x)
      p *= phi(xi);
    return p;
  }

  /// sum over |k - round(x)| <= tail_cutoff of phi(x - k)
  double partition_sum(double x) const { return lattice_sum(x, tail_cutoff_); }

  /// sum_{k=0}^{n} phi(n x - k), bounded below by phi(1) on [0, 1]
  double truncated_sum_lower_bound(int n, double x) const {
    if (n < 1)
      throw PreconditionError("truncated_sum_lower_bound: n must be positive");
    if (!(x >= 0.0 && x <= 1.0))
      throw PreconditionError("truncated_sum_lower_bound: x must lie in [0, 1]");
    StableSum s;
    for (int k = 0; k <= n; ++k)
      s += phi(n * x - k);
    return s.get();
  }

  /// Discrete absolute moment sup_x sum_k |x - k|^r phi(x - k), sampled at
  /// 1001 points of [0, 1].
  MomentEstimate moment(double r) const {
    if (!(r >= 0.0))
      throw PreconditionError("moment: order must be nonnegative");
    MomentEstimate m;
    const double base = moment_at_cutoff(r, tail_cutoff_);
    const double doubled = moment_at_cutoff(r, 2 * tail_cutoff_);
    m.value = base;
    m.tail_residual = std::abs(doubled - base);
    if (activation_.decay_exponent && r >= *activation_.decay_exponent - 1.0)
      m.excluded_by_decay = true;
    m.diverges = m.excluded_by_decay || m.tail_residual > 1e-8 || !std::isfinite(base);
    return m;
  }

  /// max{phi(u) : |u| >= n delta} / min{phi(u) : 0 < u <= n delta^2}.
  /// Uses phi(n delta) / phi(n delta^2) when the shape has been verified,
  /// otherwise a grid scan.
  double ratio_condition(int n, double delta) const {
    check_ratio_args(n, delta);
    if (!shape_verified_)
      return ratio_condition_scan(n, delta);
    const double num = phi(n * delta);
    const double den = phi(n * delta * delta);
    if (!(den > 0.0))
      throw NumericGuardError("ratio_condition: denominator underflowed at n=" + std::to_string(n));
    return num / den;
  }

  /// Grid estimate with 10^4 samples per interval, u = n t - k restricted to
  /// |u| <= n.
  double ratio_condition_scan(int n, double delta) const {
    check_ratio_args(n, delta);
    constexpr int samples = 10000;
    const double lo = n * delta;
    const double hi = static_cast<double>(n);
    double max_v = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double u = lo + (hi - lo) * i / (samples - 1);
      max_v = std::max({max_v, phi(u), phi(-u)});
    }
    const double right = n * delta * delta;
    double min_v = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= samples; ++i)
      min_v = std::min(min_v, phi(right * i / samples));
    if (!(min_v > 0.0))
      throw NumericGuardError("ratio_condition: denominator underflowed at n=" + std::to_string(n));
    return max_v / min_v;
  }

private:
  static void check_ratio_args(int n, double delta) {
    if (n < 1)
      throw PreconditionError("ratio_condition: n must be positive");
    if (!(delta > 0.0 && delta < 1.0))
      throw PreconditionError("ratio_condition: delta must lie in (0, 1)");
  }

  double lattice_sum(double x, int cutoff) const {
    const double c = std::round(x);
    StableSum s;
    for (int j = -cutoff; j <= cutoff; ++j)
      s += phi(x - (c + j));
    return s.get();
  }

  double moment_at_cutoff(double r, int cutoff) const {
    double best = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = i / 1000.0;
      StableSum s;
      for (int k = -cutoff; k <= cutoff; ++k) {
        const double u = x - k;
        s += std::pow(std::abs(u), r) * phi(u);
      }
      best = std::max(best, s.get());
    }
    return best;
  }

  bool verify_shape() const {
    constexpr int samples = 10000;
    constexpr double half_width = 50.0;
    double prev = phi(0.0);
    if (!(prev > 0.0))
      return false;
    for (int i = 1; i <= samples; ++i) {
      const double x = half_width * i / samples;
      const double v = phi(x);
      if (v < 0.0 || v > prev)
        return false;
      if (std::abs(v - phi(-x)) > 1e-12)
        return false;
      prev = v;
    }
    return true;
  }

  ActivationSpec activation_;
  int tail_cutoff_;
  double partition_constant_ = 0.0;
  double partition_deviation_ = 0.0;
  bool tail_converged_ = false;
  bool shape_verified_ = false;
};

} // namespace nnop
