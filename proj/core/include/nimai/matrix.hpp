#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace nimai {

// Dense row-major matrix of doubles. All model math at desk scale runs on
// this; keeping it minimal (no expression templates, no views into strides)
// makes the backward passes easy to audit.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows && c < cols);
    return a[r * cols + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows && c < cols);
    return a[r * cols + c];
  }

  std::span<double> row(std::size_t r) {
    return {a.data() + r * cols, cols};
  }
  std::span<const double> row(std::size_t r) const {
    return {a.data() + r * cols, cols};
  }

  bool same_shape(const Mat& o) const {
    return rows == o.rows && cols == o.cols;
  }

  bool all_finite() const {
    for (double v : a)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// out = x * transpose(w); w is (out_dim, in_dim) row-major.
inline void matmul_nt(const Mat& x, const Mat& w, Mat& out) {
  assert(x.cols == w.cols);
  out.rows = x.rows;
  out.cols = w.rows;
  out.a.assign(out.rows * out.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.a.data() + i * x.cols;
    double* oi = out.a.data() + i * out.cols;
    for (std::size_t j = 0; j < w.rows; ++j) {
      const double* wj = w.a.data() + j * w.cols;
      double acc = 0.0;
      for (std::size_t k = 0; k < x.cols; ++k) acc += xi[k] * wj[k];
      oi[j] = acc;
    }
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace nimai
