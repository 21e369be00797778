#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nnop/kernel.hpp"

using namespace nnop;

namespace {

ActivationSpec algebraic_activation(std::optional<double> beta) {
  return custom_activation(
      "algebraic", [](double x) { return 0.5 + x / (2.0 * (1.0 + std::abs(x))); }, beta, std::pair{0.0, 1.0});
}

} // namespace

// Reference values computed to 30 digits with mpmath.
TEST(Kernel, ReferenceValues) {
  const Kernel lg(logistic_activation());
  const Kernel th(tanh_activation());
  EXPECT_NEAR(lg.phi(0.0), 0.231058578630004879, 1e-16);
  EXPECT_NEAR(lg.phi(1.0), 0.190398538988941222, 1e-16);
  EXPECT_NEAR(lg.phi(3.0), 0.0506083560300129990, 1e-16);
  EXPECT_NEAR(lg.phi(30.0) / 1.0997089682646450462e-13, 1.0, 1e-12);
  EXPECT_NEAR(th.phi(0.0), 0.761594155955764888, 1e-15);
  EXPECT_NEAR(th.phi(1.0), 0.482013790037908442, 1e-15);
  EXPECT_NEAR(th.phi(20.0) / 3.081637569405090568e-17, 1.0, 1e-12);
  const double origin[2] = {0.0, 0.0};
  EXPECT_NEAR(lg.phi_product(origin), 0.0533880667585181475, 1e-16);
}

TEST(Kernel, FarTailVanishes) {
  for (const auto& a : {logistic_activation(), tanh_activation()}) {
    const Kernel k(a);
    const double p[3] = {0.2, 1e6, -0.4};
    EXPECT_LE(k.phi_product(p), 1e-12);
    EXPECT_GE(k.phi(1e6), 0.0);
  }
}

TEST(Kernel, EmptyProductPointRejected) {
  const Kernel k(logistic_activation());
  EXPECT_THROW(k.phi_product(std::span<const double>{}), PreconditionError);
}

TEST(Kernel, PartitionConstants) {
  const Kernel lg(logistic_activation());
  const Kernel th(tanh_activation());
  EXPECT_NEAR(lg.partition_constant(), 1.0, 1e-14);
  EXPECT_NEAR(th.partition_constant(), 2.0, 1e-14);
  EXPECT_LE(lg.partition_deviation(), 1e-14);
  EXPECT_LE(th.partition_deviation(), 1e-14);
  EXPECT_TRUE(lg.tail_converged());
  EXPECT_TRUE(lg.shape_verified());
  EXPECT_TRUE(th.shape_verified());
}

TEST(KernelProperty, ShapeOnRandomPoints) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (const auto& a : {logistic_activation(), tanh_activation()}) {
    const Kernel k(a);
    for (int i = 0; i < 2000; ++i) {
      const double x = u(rng), y = u(rng);
      EXPECT_GE(k.phi(x), 0.0);
      EXPECT_NEAR(k.phi(x), k.phi(-x), 1e-15);
      if (x < y) {
        EXPECT_GE(k.phi(x), k.phi(y));
      }
      EXPECT_NEAR(k.partition_sum(x - 20.0), k.partition_constant(), 1e-14);
    }
  }
}

TEST(Kernel, TruncatedSumBoundedBelowByPhiOne) {
  const Kernel k(logistic_activation());
  for (int n : {1, 5, 40})
    for (int i = 0; i <= 200; ++i)
      EXPECT_GE(k.truncated_sum_lower_bound(n, i / 200.0), k.phi(1.0) - 1e-15);
  EXPECT_THROW(k.truncated_sum_lower_bound(5, 1.5), PreconditionError);
  EXPECT_THROW(k.truncated_sum_lower_bound(0, 0.5), PreconditionError);
}

// M_1 and M_2 for the logistic kernel: mpmath, infinite lattice sums at 101 points.
TEST(Kernel, MomentsOfBuiltins) {
  const Kernel lg(logistic_activation());
  const auto m0 = lg.moment(0.0);
  EXPECT_NEAR(m0.value, 1.0, 1e-13);
  EXPECT_NEAR(lg.moment(1.0).value, 1.48759828913658263, 1e-9);
  EXPECT_NEAR(lg.moment(2.0).value, 3.62320167826205982, 1e-9);
  for (double r : {0.0, 1.0, 2.0, 3.0}) {
    EXPECT_FALSE(lg.moment(r).diverges) << r;
    EXPECT_FALSE(Kernel(tanh_activation()).moment(r).diverges) << r;
  }
  EXPECT_THROW(lg.moment(-1.0), PreconditionError);
}

TEST(Kernel, HeavyTailMomentFlaggedDivergent) {
  // no declared exponent: divergence must come from the tail-doubling check
  const Kernel k(algebraic_activation(std::nullopt));
  EXPECT_FALSE(k.tail_converged());
  const auto m = k.moment(1.0);
  EXPECT_TRUE(m.diverges);
  EXPECT_FALSE(m.excluded_by_decay);
  EXPECT_GT(m.tail_residual, 1e-8);

  const Kernel declared(algebraic_activation(2.0));
  EXPECT_TRUE(declared.moment(1.0).excluded_by_decay);
  EXPECT_TRUE(declared.moment(1.0).diverges);
}

TEST(Kernel, RatioMatchesExponentialAsymptote) {
  // log ratio ~ n (delta^2 - delta) for logistic, 2 n (delta^2 - delta) for tanh
  const double delta = 0.5;
  const Kernel lg(logistic_activation());
  const Kernel th(tanh_activation());
  double prev_lg = 2.0, prev_th = 2.0;
  for (int n : {10, 20, 40, 80, 160}) {
    const double rl = lg.ratio_condition(n, delta);
    const double rt = th.ratio_condition(n, delta);
    EXPECT_LT(rl, prev_lg);
    EXPECT_LT(rt, prev_th);
    prev_lg = rl;
    prev_th = rt;
    if (n >= 40) {
      EXPECT_NEAR(std::log(rl) / (n * (delta * delta - delta)), 1.0, 0.02) << n;
      EXPECT_NEAR(std::log(rt) / (2.0 * n * (delta * delta - delta)), 1.0, 0.02) << n;
    }
  }
}

TEST(Kernel, RatioScanAgreesWithClosedForm) {
  const Kernel lg(logistic_activation());
  for (int n : {5, 20, 60})
    for (double delta : {0.3, 0.5, 0.8})
      EXPECT_NEAR(lg.ratio_condition_scan(n, delta) / lg.ratio_condition(n, delta), 1.0, 1e-9);
}

TEST(Kernel, RatioPreconditions) {
  const Kernel lg(logistic_activation());
  EXPECT_THROW(lg.ratio_condition(10, 0.0), PreconditionError);
  EXPECT_THROW(lg.ratio_condition(10, 1.0), PreconditionError);
  EXPECT_THROW(lg.ratio_condition(0, 0.5), PreconditionError);
  EXPECT_THROW(lg.ratio_condition(100000, 0.5), NumericGuardError);
}
