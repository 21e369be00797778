#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "nnop/operator.hpp"

using namespace nnop;
using nnop::testing::make_config;

namespace {

double smooth(std::span<const double> t) {
  double s = 0.0;
  for (double x : t)
    s += x * x;
  return std::sin(3.0 * s) + t[0];
}

} // namespace

TEST(Operator, ReproducesConstants) {
  for (const char* act : {"logistic", "tanh"}) {
    for (const char* meas : {"lebesgue", "jacobi:0.5,0.5", "density:1+t1*t2"}) {
      const auto cfg = make_config(act, meas, 7, 2);
      const auto table = coefficients([](std::span<const double>) { return 3.7; }, cfg);
      for (double v : table.values.data)
        EXPECT_EQ(v, 3.7);
      for (double x : {0.0, 0.13, 0.5, 1.0}) {
        const std::array<double, 2> p{x, 1.0 - x * x};
        EXPECT_EQ(apply(table, cfg, p), 3.7) << act << " " << meas;
      }
    }
  }
}

// c_k = int x^2 phi(n x - k) dx / int phi(n x - k) dx, mpmath to 30 digits
TEST(Operator, OneDimensionalCoefficientsMatchReference) {
  auto sq = [](std::span<const double> t) { return t[0] * t[0]; };
  const auto c1 = coefficients(sq, make_config("logistic", "lebesgue", 1, 1));
  EXPECT_NEAR(c1.values.data[0], 0.316411640349593727, 1e-13);
  EXPECT_NEAR(c1.values.data[1], 0.348345091254473106, 1e-13);
  const auto c2 = coefficients(sq, make_config("logistic", "lebesgue", 2, 1));
  EXPECT_NEAR(c2.values.data[0], 0.272147669541590462, 1e-13);
  EXPECT_NEAR(c2.values.data[1], 0.329102910087398432, 1e-13);
  EXPECT_NEAR(c2.values.data[2], 0.389787434065374828, 1e-13);
}

TEST(Operator, ApplyIsNormalizedKernelAverage) {
  const auto cfg = make_config("logistic", "lebesgue", 2, 1);
  const auto table = coefficients([](std::span<const double> t) { return t[0] * t[0]; }, cfg);
  const Kernel k(logistic_activation());
  const double x = 0.3;
  double num = 0.0, den = 0.0;
  for (int j = 0; j <= 2; ++j) {
    num += table.values.data[j] * k.phi(2 * x - j);
    den += k.phi(2 * x - j);
  }
  const std::array<double, 1> p{x};
  EXPECT_NEAR(apply(table, cfg, p), num / den, 1e-15);
}

TEST(Operator, FactorizedMatchesDirect) {
  for (const char* meas : {"lebesgue", "jacobi:0.5,0.5", "jacobi:1.5,0.5,0,2"}) {
    const auto cfg = make_config("logistic", meas, 8, 2);
    const auto fact = coefficients_factorized(smooth, cfg);
    const auto direct = coefficients_direct(smooth, cfg);
    ASSERT_EQ(fact.values.size(), direct.values.size());
    for (std::size_t i = 0; i < fact.values.size(); ++i)
      EXPECT_NEAR(fact.values.data[i], direct.values.data[i], 1e-10) << meas << " " << i;
  }
  EXPECT_THROW(coefficients_factorized(smooth, make_config("logistic", "density:1+t1", 4, 2)), PreconditionError);
}

// non-product measure: the direct path against integrate() with the joint kernel
TEST(Operator, DirectPathMatchesIndependentIntegration) {
  const auto cfg = make_config("tanh", "density:1+t1*t2", 3, 2);
  const auto table = coefficients(smooth, cfg);
  const Kernel k(tanh_activation());
  for (int b0 = 0; b0 <= 3; ++b0) {
    for (int b1 = 0; b1 <= 3; ++b1) {
      auto weight = [&](std::span<const double> t) {
        const std::array<double, 2> u{3 * t[0] - b0, 3 * t[1] - b1};
        return k.phi_product(u);
      };
      const double num = integrate([&](std::span<const double> t) { return smooth(t) * weight(t); }, *cfg.measure);
      const double den = integrate(weight, *cfg.measure);
      const std::array<int, 2> beta{b0, b1};
      EXPECT_NEAR(table.at(beta), num / den, 1e-12);
    }
  }
}

TEST(OperatorProperty, BoundedBySupOfF) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto cfg = make_config("logistic", "jacobi:0.5,0.5", 12, 2);
  auto f = [](std::span<const double> t) { return std::sin(4 * t[0]) * std::cos(5 * t[1]); };
  const auto table = coefficients(f, cfg);
  for (int i = 0; i < 500; ++i) {
    const std::array<double, 2> p{u(rng), u(rng)};
    EXPECT_LE(std::abs(apply(table, cfg, p)), 1.0);
  }
  for (double v : table.values.data)
    EXPECT_LE(std::abs(v), 1.0);
}

TEST(OperatorProperty, PositiveAndMonotone) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto cfg = make_config("tanh", "lebesgue", 6, 2);
  auto f = [](std::span<const double> t) { return t[0] * t[1]; };
  auto g = [&](std::span<const double> t) { return f(t) + 0.1 * t[0] * t[0]; };
  const auto tf = coefficients(f, cfg);
  const auto tg = coefficients(g, cfg);
  for (int i = 0; i < 300; ++i) {
    const std::array<double, 2> p{u(rng), u(rng)};
    const double sf = apply(tf, cfg, p);
    EXPECT_GE(sf, 0.0);
    EXPECT_LE(sf, apply(tg, cfg, p) + 1e-15);
  }
}

TEST(OperatorProperty, ReflectionSymmetry) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto cfg = make_config("logistic", "jacobi:0.5,0.5", 9, 2);
  auto f = [](std::span<const double> t) { return std::exp(t[0]) * (1 + t[1] * t[1]); };
  auto g = [&](std::span<const double> t) {
    const std::array<double, 2> r{1.0 - t[0], t[1]};
    return f(r);
  };
  const auto tf = coefficients(f, cfg);
  const auto tg = coefficients(g, cfg);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng), y = u(rng);
    const std::array<double, 2> p{x, y}, q{1.0 - x, y};
    EXPECT_NEAR(apply(tg, cfg, p), apply(tf, cfg, q), 1e-12);
  }
}

TEST(Operator, ClassicalOperatorSmallCase) {
  const Kernel k(logistic_activation());
  auto f = [](std::span<const double> t) { return 2.0 + t[0]; };
  const std::array<double, 1> zero{0.0};
  const double expect = (2.0 * k.phi(0.0) + 3.0 * k.phi(-1.0)) / (k.phi(0.0) + k.phi(-1.0));
  EXPECT_NEAR(apply_classical(f, k, 1, zero), expect, 1e-15);
  const std::array<double, 3> p{0.2, 0.9, 0.4};
  EXPECT_EQ(apply_classical([](std::span<const double>) { return -1.25; }, k, 5, p), -1.25);
  const std::array<double, 1> outside{1.2};
  EXPECT_THROW(apply_classical(f, k, 3, outside), PreconditionError);
}

TEST(Operator, GridEvaluationMatchesPointwise) {
  const auto cfg = make_config("tanh", "lebesgue", 10, 2);
  const auto table = coefficients(smooth, cfg);
  const Field field = evaluate_grid(table, cfg, 11);
  ASSERT_EQ(field.size(), 121u);
  std::array<double, 2> p{};
  for (std::size_t i = 0; i < field.size(); ++i) {
    field.node(i, p.data());
    EXPECT_NEAR(field.values.data[i], apply(table, cfg, p), 1e-14);
  }
  EXPECT_THROW(evaluate_grid(table, cfg, 1), PreconditionError);
}

TEST(Operator, ConfigValidation) {
  auto cfg = make_config("logistic", "lebesgue", 5, 2);
  cfg.d = 3;
  EXPECT_THROW(cfg.validate(), PreconditionError);
  cfg = make_config("logistic", "lebesgue", 0, 1);
  EXPECT_THROW(cfg.validate(), PreconditionError);
  cfg = make_config("logistic", "lebesgue", 20000, 2);
  EXPECT_THROW(cfg.validate(), NumericGuardError);
  cfg = make_config("logistic", "lebesgue", 4, 2);
  const auto table = coefficients(smooth, cfg);
  const std::array<double, 2> outside{0.5, -0.1};
  EXPECT_THROW(apply(table, cfg, outside), PreconditionError);
  const std::array<double, 1> short_point{0.5};
  EXPECT_THROW(apply(table, cfg, short_point), PreconditionError);
}

TEST(Operator, ThreadCountDoesNotChangeResults) {
  auto cfg = make_config("logistic", "jacobi:0.5,0.5", 15, 2);
  const auto one = coefficients_direct(smooth, cfg);
  cfg.threads = 4;
  const auto four = coefficients_direct(smooth, cfg);
  EXPECT_EQ(one.values.data, four.values.data);
  const auto f1 = coefficients_factorized(smooth, cfg);
  cfg.threads = 1;
  EXPECT_EQ(f1.values.data, coefficients_factorized(smooth, cfg).values.data);
}
