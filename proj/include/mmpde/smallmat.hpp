// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mmpde/table.hpp"

namespace mmpde {

/// A d x d matrix, d <= 3, stored column-major with leading dimension d.
struct SmallMat {
  int d = 0;
  std::array<double, 9> a{};

  SmallMat() = default;
  explicit SmallMat(int dim) : d(dim) {}

  double& operator()(int i, int j) { return a[i + d * j]; }
  double operator()(int i, int j) const { return a[i + d * j]; }

  static SmallMat identity(int dim) {
    SmallMat m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }
  static SmallMat diag(std::span<const double> v) {
    SmallMat m(static_cast<int>(v.size()));
    for (int i = 0; i < m.d; ++i) m(i, i) = v[i];
    return m;
  }
};

inline SmallMat operator*(const SmallMat& x, const SmallMat& y) {
  SmallMat r(x.d);
  for (int j = 0; j < x.d; ++j)
    for (int k = 0; k < x.d; ++k) {
      const double ykj = y(k, j);
      for (int i = 0; i < x.d; ++i) r(i, j) += x(i, k) * ykj;
    }
  return r;
}

inline SmallMat operator+(SmallMat x, const SmallMat& y) {
  for (int k = 0; k < x.d * x.d; ++k) x.a[k] += y.a[k];
  return x;
}

inline SmallMat operator-(SmallMat x, const SmallMat& y) {
  for (int k = 0; k < x.d * x.d; ++k) x.a[k] -= y.a[k];
  return x;
}

inline SmallMat operator*(double s, SmallMat x) {
  for (int k = 0; k < x.d * x.d; ++k) x.a[k] *= s;
  return x;
}

inline SmallMat transpose(const SmallMat& x) {
  SmallMat r(x.d);
  for (int i = 0; i < x.d; ++i)
    for (int j = 0; j < x.d; ++j) r(j, i) = x(i, j);
  return r;
}

inline double trace(const SmallMat& x) {
  double s = 0.0;
  for (int i = 0; i < x.d; ++i) s += x(i, i);
  return s;
}

inline double det(const SmallMat& x) {
  switch (x.d) {
    case 1:
      return x.a[0];
    case 2:
      return x(0, 0) * x(1, 1) - x(0, 1) * x(1, 0);
    case 3:
      return x(0, 0) * (x(1, 1) * x(2, 2) - x(1, 2) * x(2, 1)) -
             x(0, 1) * (x(1, 0) * x(2, 2) - x(1, 2) * x(2, 0)) +
             x(0, 2) * (x(1, 0) * x(2, 1) - x(1, 1) * x(2, 0));
    default:
      return 1.0;
  }
}

/// Cofactor inverse given a precomputed determinant.
inline SmallMat inverse(const SmallMat& x, double dt) {
  SmallMat r(x.d);
  const double s = 1.0 / dt;
  switch (x.d) {
    case 1:
      r.a[0] = s;
      break;
    case 2:
      r(0, 0) = x(1, 1) * s;
      r(1, 1) = x(0, 0) * s;
      r(0, 1) = -x(0, 1) * s;
      r(1, 0) = -x(1, 0) * s;
      break;
    case 3:
      r(0, 0) = (x(1, 1) * x(2, 2) - x(1, 2) * x(2, 1)) * s;
      r(0, 1) = (x(0, 2) * x(2, 1) - x(0, 1) * x(2, 2)) * s;
      r(0, 2) = (x(0, 1) * x(1, 2) - x(0, 2) * x(1, 1)) * s;
      r(1, 0) = (x(1, 2) * x(2, 0) - x(1, 0) * x(2, 2)) * s;
      r(1, 1) = (x(0, 0) * x(2, 2) - x(0, 2) * x(2, 0)) * s;
      r(1, 2) = (x(0, 2) * x(1, 0) - x(0, 0) * x(1, 2)) * s;
      r(2, 0) = (x(1, 0) * x(2, 1) - x(1, 1) * x(2, 0)) * s;
      r(2, 1) = (x(0, 1) * x(2, 0) - x(0, 0) * x(2, 1)) * s;
      r(2, 2) = (x(0, 0) * x(1, 1) - x(0, 1) * x(1, 0)) * s;
      break;
    default:
      break;
  }
  return r;
}

inline SmallMat inverse(const SmallMat& x) { return inverse(x, det(x)); }

inline double max_abs(const SmallMat& x) {
  double m = 0.0;
  for (int k = 0; k < x.d * x.d; ++k) m = std::max(m, std::abs(x.a[k]));
  return m;
}

inline SmallMat symmetrize(const SmallMat& x) { return 0.5 * (x + transpose(x)); }

/// Eigen-decomposition of a symmetric matrix: x = Q diag(lambda) Q^T,
/// eigenvalues ascending. Closed form for d <= 2, cyclic Jacobi for d = 3.
struct SymEig {
  std::array<double, 3> lambda{};
  SmallMat q;
};
SymEig sym_eig(const SmallMat& x);

/// Q diag(values) Q^T.
SmallMat compose(const SmallMat& q, std::span<const double> values);

/// Array of n small d x d matrices; row i holds the d^2 entries of matrix i
/// in column-major order [M11, ..., Md1, ..., M1d, ..., Mdd].
class MatBatch {
 public:
  MatBatch() = default;
  MatBatch(int d, std::size_t n) : d_(d), n_(n), data_(n * d * d, 0.0) {}
  MatBatch(int d, std::size_t n, std::vector<double> data);

  /// n copies of one matrix.
  static MatBatch constant(std::size_t n, const SmallMat& m);
  static MatBatch identity(int d, std::size_t n) { return constant(n, SmallMat::identity(d)); }

  int dim() const noexcept { return d_; }
  std::size_t size() const noexcept { return n_; }

  SmallMat get(std::size_t i) const {
    SmallMat m(d_);
    const std::size_t dd = d_ * d_;
    for (std::size_t k = 0; k < dd; ++k) m.a[k] = data_[i * dd + k];
    return m;
  }
  void set(std::size_t i, const SmallMat& m) {
    const std::size_t dd = d_ * d_;
    for (std::size_t k = 0; k < dd; ++k) data_[i * dd + k] = m.a[k];
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * d_ * d_, static_cast<std::size_t>(d_ * d_)};
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  /// As an n x d^2 table (copy).
  RealTable to_table() const;

 private:
  int d_ = 0;
  std::size_t n_ = 0;
  std::vector<double> data_;
};

MatBatch batch_mult(const MatBatch& a, const MatBatch& b);
MatBatch batch_transpose(const MatBatch& a);
std::vector<double> batch_det(const MatBatch& a);
/// Throws SingularMatrixError naming the first row with |det| <= 1e-14 * scale.
MatBatch batch_inv(const MatBatch& a);

struct BatchEig {
  RealTable values;  // n x d, ascending per row
  MatBatch vectors;  // eigenvectors as columns
};
/// Throws if any matrix deviates from symmetry by more than 1e-12 (relative).
BatchEig sym_eig(const MatBatch& a);

/// Caps every eigenvalue at beta; matrices already below the ceiling are
/// returned untouched.
MatBatch eig_ceiling(const MatBatch& m, double beta);

bool is_symmetric(const SmallMat& m, double tol = 1e-12);

}  // namespace mmpde
