#pragma once
#ifdef __FAST_MATH__
#error fast math enabled, this would negate compensation.
#endif

#include <cmath>
#include <cstddef>
#include <span>

namespace nnop {

/// Neumaier-compensated accumulator. Deterministic for a fixed insertion
/// order.
class StableSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      carry_ += (sum_ - t) + x;
    else
      carry_ += (x - t) + sum_;
    sum_ = t;
  }

  StableSum& operator+=(double x) {
    add(x);
    return *this;
  }

  double get() const { return sum_ + carry_; }

private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double stable_sum(std::span<const double> xs) {
  StableSum s;
  for (double x : xs)
    s.add(x);
  return s.get();
}

/// Pairwise tree reduction with a topology that depends only on the length.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8)
    return stable_sum(xs);
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

} // namespace nnop
