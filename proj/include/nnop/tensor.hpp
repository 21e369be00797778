#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "nnop/errors.hpp"
#include "nnop/parallel.hpp"

namespace nnop {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  Matrix transposed() const {
    Matrix t(cols, rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        t(c, r) = (*this)(r, c);
    return t;
  }
};

/// Dense row-major tensor of rank 1..3; the last axis varies fastest.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0) : shape(std::move(s)) {
    data.assign(element_count(shape), fill);
  }

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t rank() const { return shape.size(); }
  std::size_t size() const { return data.size(); }

  /// Multi-index of a flat position.
  void unravel(std::size_t flat, std::size_t* idx) const {
    for (std::size_t a = shape.size(); a-- > 0;) {
      idx[a] = flat % shape[a];
      flat /= shape[a];
    }
  }
};

/// out = in x_axis m: contracts `axis` of `in` (length m.cols) against the
/// columns of m, producing length m.rows on that axis. Each output element
/// is accumulated in ascending column order.
inline Tensor mode_product(const Tensor& in, std::size_t axis, const Matrix& m, unsigned threads = 1) {
  if (axis >= in.rank() || in.shape[axis] != m.cols)
    throw PreconditionError("mode_product: shape mismatch");
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a)
    outer *= in.shape[a];
  for (std::size_t a = axis + 1; a < in.rank(); ++a)
    inner *= in.shape[a];
  auto out_shape = in.shape;
  out_shape[axis] = m.rows;
  Tensor out(out_shape);
  const std::size_t len = m.cols;
  parallel_for(0, outer * m.rows, threads, [&](std::size_t job) {
    const std::size_t o = job / m.rows;
    const std::size_t r = job % m.rows;
    double* dst = out.data.data() + (o * m.rows + r) * inner;
    const double* src = in.data.data() + o * len * inner;
    const double* row = m.data.data() + r * len;
    for (std::size_t c = 0; c < len; ++c) {
      const double w = row[c];
      if (w == 0.0)
        continue;
      const double* s = src + c * inner;
      for (std::size_t i = 0; i < inner; ++i)
        dst[i] += w * s[i];
    }
  });
  return out;
}

/// Applies one matrix per axis, axis 0 first.
inline Tensor contract_all(Tensor t, const std::vector<const Matrix*>& per_axis, unsigned threads = 1) {
  for (std::size_t a = 0; a < per_axis.size(); ++a)
    t = mode_product(t, a, *per_axis[a], threads);
  return t;
}

} // namespace nnop
