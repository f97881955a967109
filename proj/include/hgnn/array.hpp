#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "hgnn/errors.hpp"

namespace hgnn {

// Dense row-major 2-D array of doubles. The single numeric container used
// by the autodiff tape, the parameter store and the data pipeline.
struct Array {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Array() = default;

  Array(int r, int c, double fill = 0.0) : rows(r), cols(c) {
    if (r <= 0 || c <= 0)
      throw ShapeError("Array: non-positive shape " + std::to_string(r) + "x" +
                       std::to_string(c));
    v.assign(static_cast<std::size_t>(r) * c, fill);
  }

  static Array of(std::initializer_list<std::initializer_list<double>> rs) {
    const int r = static_cast<int>(rs.size());
    const int c = r > 0 ? static_cast<int>(rs.begin()->size()) : 0;
    Array a(r, c);
    int i = 0;
    for (const auto& row : rs) {
      if (static_cast<int>(row.size()) != c)
        throw ShapeError("Array::of: ragged rows");
      int j = 0;
      for (double x : row) a(i, j++) = x;
      ++i;
    }
    return a;
  }

  static Array row(std::initializer_list<double> xs) {
    Array a(1, static_cast<int>(xs.size()));
    int j = 0;
    for (double x : xs) a(0, j++) = x;
    return a;
  }

  static Array col(std::initializer_list<double> xs) {
    Array a(static_cast<int>(xs.size()), 1);
    int i = 0;
    for (double x : xs) a(i++, 0) = x;
    return a;
  }

  double& operator()(int r, int c) {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
  double operator()(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  std::size_t size() const { return v.size(); }

  bool same_shape(const Array& o) const {
    return rows == o.rows && cols == o.cols;
  }

  bool is_vector() const { return rows == 1 || cols == 1; }
  bool is_scalar() const { return rows == 1 && cols == 1; }

  double scalar() const {
    if (!is_scalar())
      throw ContractError("Array::scalar: shape is " + shape_str());
    return v[0];
  }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  std::string shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
  }
};

inline double max_abs_diff(const Array& a, const Array& b) {
  if (!a.same_shape(b))
    throw ShapeError("max_abs_diff: " + a.shape_str() + " vs " + b.shape_str());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

// ---- plain (non-recorded) matrix kernels, accumulate into C ----

// C += A * B
inline void mm_nn_acc(const Array& a, const Array& b, Array& c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = &a.v[static_cast<std::size_t>(i) * a.cols];
    double* crow = &c.v[static_cast<std::size_t>(i) * c.cols];
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = &b.v[static_cast<std::size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
}

// C += A * B^T
inline void mm_nt_acc(const Array& a, const Array& b, Array& c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = &a.v[static_cast<std::size_t>(i) * a.cols];
    double* crow = &c.v[static_cast<std::size_t>(i) * c.cols];
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = &b.v[static_cast<std::size_t>(j) * b.cols];
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      crow[j] += s;
    }
  }
}

// C += A^T * B  (A is m x r, B is m x c, C is r x c)
inline void mm_tn_acc(const Array& a, const Array& b, Array& c) {
  for (int k = 0; k < a.rows; ++k) {
    const double* arow = &a.v[static_cast<std::size_t>(k) * a.cols];
    const double* brow = &b.v[static_cast<std::size_t>(k) * b.cols];
    for (int i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      double* crow = &c.v[static_cast<std::size_t>(i) * c.cols];
      for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
}

}  // namespace hgnn
