// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/smallmat.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "mmpde/error.hpp"

namespace mmpde {

namespace {

void sort_ascending(SymEig& e, int d) {
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.begin() + d,
            [&](int i, int j) { return e.lambda[i] < e.lambda[j]; });
  SymEig s;
  s.q = SmallMat(d);
  for (int k = 0; k < d; ++k) {
    s.lambda[k] = e.lambda[order[k]];
    for (int i = 0; i < d; ++i) s.q(i, k) = e.q(i, order[k]);
  }
  e = s;
}

SymEig jacobi3(const SmallMat& x) {
  SmallMat a = x;
  SmallMat v = SmallMat::identity(3);
  const double scale = std::max(max_abs(x), 1e-300);
  for (int sweep = 0; sweep < 60; ++sweep) {
    const double off = std::abs(a(0, 1)) + std::abs(a(0, 2)) + std::abs(a(1, 2));
    if (off <= 1e-17 * scale) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // A <- J^T A J with the rotation in the (p, q) plane.
        for (int k = 0; k < 3; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  SymEig e;
  e.q = v;
  for (int i = 0; i < 3; ++i) e.lambda[i] = a(i, i);
  return e;
}

}  // namespace

bool is_symmetric(const SmallMat& m, double tol) {
  const double scale = std::max(1.0, max_abs(m));
  for (int i = 0; i < m.d; ++i)
    for (int j = i + 1; j < m.d; ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol * scale) return false;
  return true;
}

SymEig sym_eig(const SmallMat& x) {
  SymEig e;
  e.q = SmallMat::identity(x.d);
  switch (x.d) {
    case 1:
      e.lambda[0] = x.a[0];
      return e;
    case 2: {
      const double a = x(0, 0), b = 0.5 * (x(0, 1) + x(1, 0)), c = x(1, 1);
      if (b == 0.0) {
        e.lambda[0] = a;
        e.lambda[1] = c;
      } else {
        const double phi = 0.5 * std::atan2(2.0 * b, a - c);
        const double cs = std::cos(phi), sn = std::sin(phi);
        e.lambda[0] = a * cs * cs + 2.0 * b * cs * sn + c * sn * sn;
        e.lambda[1] = a * sn * sn - 2.0 * b * cs * sn + c * cs * cs;
        e.q(0, 0) = cs;
        e.q(1, 0) = sn;
        e.q(0, 1) = -sn;
        e.q(1, 1) = cs;
      }
      break;
    }
    case 3:
      e = jacobi3(symmetrize(x));
      break;
    default:
      break;
  }
  sort_ascending(e, x.d);
  return e;
}

SmallMat compose(const SmallMat& q, std::span<const double> values) {
  SmallMat r(q.d);
  for (int k = 0; k < q.d; ++k)
    for (int j = 0; j < q.d; ++j) {
      const double w = values[k] * q(j, k);
      for (int i = 0; i < q.d; ++i) r(i, j) += q(i, k) * w;
    }
  return r;
}

MatBatch::MatBatch(int d, std::size_t n, std::vector<double> data)
    : d_(d), n_(n), data_(std::move(data)) {
  require(d >= 1 && d <= 3, "MatBatch: dimension must be 1, 2 or 3");
  require(data_.size() == n * d * d, "MatBatch: data length must be n*d*d");
}

MatBatch MatBatch::constant(std::size_t n, const SmallMat& m) {
  MatBatch b(m.d, n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, m);
  return b;
}

RealTable MatBatch::to_table() const {
  return RealTable(n_, static_cast<std::size_t>(d_ * d_), data_);
}

namespace {
void check_pair(const MatBatch& a, const MatBatch& b, const char* op) {
  require(a.dim() == b.dim() && a.size() == b.size(),
          std::string(op) + ": batches must have matching d and n");
}
}  // namespace

MatBatch batch_mult(const MatBatch& a, const MatBatch& b) {
  check_pair(a, b, "batch_mult");
  MatBatch r(a.dim(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r.set(i, a.get(i) * b.get(i));
  return r;
}

MatBatch batch_transpose(const MatBatch& a) {
  MatBatch r(a.dim(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r.set(i, transpose(a.get(i)));
  return r;
}

std::vector<double> batch_det(const MatBatch& a) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = det(a.get(i));
  return r;
}

MatBatch batch_inv(const MatBatch& a) {
  MatBatch r(a.dim(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const SmallMat m = a.get(i);
    const double dt = det(m);
    const double scale = std::pow(max_abs(m), a.dim());
    if (!(std::abs(dt) > 1e-14 * scale))
      throw SingularMatrixError(i, "batch_inv: singular matrix at row " + std::to_string(i));
    r.set(i, inverse(m, dt));
  }
  return r;
}

BatchEig sym_eig(const MatBatch& a) {
  const int d = a.dim();
  BatchEig out{RealTable(a.size(), d), MatBatch(d, a.size())};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const SmallMat m = a.get(i);
    if (!is_symmetric(m))
      throw Error(ErrorCode::InvalidArgument,
                  "sym_eig: matrix at row " + std::to_string(i) + " is not symmetric");
    const SymEig e = sym_eig(m);
    for (int k = 0; k < d; ++k) out.values(i, k) = e.lambda[k];
    out.vectors.set(i, e.q);
  }
  return out;
}

MatBatch eig_ceiling(const MatBatch& m, double beta) {
  require(beta > 0.0, "eig_ceiling: beta must be positive");
  MatBatch r = m;
  const int d = m.dim();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const SmallMat x = m.get(i);
    if (!is_symmetric(x))
      throw Error(ErrorCode::NotSpd, "eig_ceiling: matrix at row " + std::to_string(i) +
                                         " is not symmetric");
    SymEig e = sym_eig(x);
    if (!(e.lambda[0] > 0.0))
      throw Error(ErrorCode::NotSpd, "eig_ceiling: matrix at row " + std::to_string(i) +
                                         " is not positive definite");
    if (e.lambda[d - 1] <= beta) continue;
    for (int k = 0; k < d; ++k) e.lambda[k] = std::min(e.lambda[k], beta);
    r.set(i, symmetrize(compose(e.q, std::span<const double>(e.lambda.data(), d))));
  }
  return r;
}

}  // namespace mmpde
