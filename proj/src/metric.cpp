// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/metric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmpde/error.hpp"

namespace mmpde {

void check_spd(const MatBatch& M, const char* who) {
  for (std::size_t i = 0; i < M.size(); ++i) {
    const SmallMat m = M.get(i);
    if (!is_symmetric(m)) throw Error(ErrorCode::NotSpd, std::string(who) + ": metric not symmetric at vertex " + std::to_string(i));
    const SymEig e = sym_eig(m);
    if (!(e.lambda[0] > 0.0))
      throw Error(ErrorCode::NotSpd, std::string(who) + ": metric not positive definite at vertex " + std::to_string(i));
  }
}

RealTable grad_k_recovery(std::span<const double> u, const Mesh& m) {
  require(u.size() == m.num_vertices(), "grad_k_recovery: u must have one value per vertex");
  const int d = m.dim;
  RealTable g(m.num_elements(), d);
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    const SmallMat e = edge_matrix(m, k);
    const double de = det(e);
    if (de == 0.0) throw Error(ErrorCode::DegenerateElement, "degenerate element " + std::to_string(k));
    const SmallMat einv = inverse(e, de);
    const double u0 = u[m.tri(k, 0)];
    // g = E^{-T} (u_j - u_0)
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += einv(j, i) * (u[m.tri(k, j + 1)] - u0);
      g(k, i) = s;
    }
  }
  return g;
}

namespace {

RealTable average_to_vertices(const RealTable& per_element, const Mesh& m, const std::vector<double>& vol) {
  const std::size_t c = per_element.cols();
  RealTable out(m.num_vertices(), c);
  std::vector<double> w(m.num_vertices(), 0.0);
  for (std::size_t k = 0; k < m.num_elements(); ++k)
    for (int a = 0; a <= m.dim; ++a) {
      const Index v = m.tri(k, a);
      w[v] += vol[k];
      for (std::size_t j = 0; j < c; ++j) out(v, j) += vol[k] * per_element(k, j);
    }
  for (std::size_t v = 0; v < out.rows(); ++v) {
    if (w[v] == 0.0) throw Error(ErrorCode::InvalidArgument, "isolated vertex " + std::to_string(v));
    for (std::size_t j = 0; j < c; ++j) out(v, j) /= w[v];
  }
  return out;
}

std::vector<double> column(const RealTable& t, std::size_t j) {
  std::vector<double> c(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) c[i] = t(i, j);
  return c;
}

MatBatch element_means(const MatBatch& M, const Mesh& m) {
  MatBatch out(m.dim, m.num_elements());
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    SmallMat s(m.dim);
    for (int a = 0; a <= m.dim; ++a) s = s + M.get(m.tri(k, a));
    out.set(k, (1.0 / (m.dim + 1)) * s);
  }
  return out;
}

}  // namespace

RealTable grad_recovery(std::span<const double> u, const Mesh& m) {
  return average_to_vertices(grad_k_recovery(u, m), m, element_volumes(m));
}

GradHessian grad_hessian_recovery(std::span<const double> u, const Mesh& m) {
  const int d = m.dim;
  const auto vol = element_volumes(m);
  GradHessian r;
  r.grad = average_to_vertices(grad_k_recovery(u, m), m, vol);
  RealTable second(m.num_vertices(), d * d);
  for (int k = 0; k < d; ++k) {
    const auto gk = column(r.grad, k);
    const RealTable g2 = average_to_vertices(grad_k_recovery(gk, m), m, vol);
    for (std::size_t v = 0; v < m.num_vertices(); ++v)
      for (int j = 0; j < d; ++j) second(v, k + d * j) = g2(v, j);
  }
  r.hessian = MatBatch(d, m.num_vertices());
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    SmallMat g(d);
    for (int q = 0; q < d * d; ++q) g.a[q] = second(v, q);
    r.hessian.set(v, symmetrize(g));
  }
  return r;
}

MetricField metric_arclength(const RealTable& u, const Mesh& m) {
  require(u.rows() == m.num_vertices(), "metric_arclength: u must have one row per vertex");
  std::vector<double> s(m.num_vertices(), 1.0);
  for (std::size_t c = 0; c < u.cols(); ++c) {
    const RealTable g = grad_recovery(column(u, c), m);
    for (std::size_t v = 0; v < g.rows(); ++v)
      for (std::size_t j = 0; j < g.cols(); ++j) s[v] += g(v, j) * g(v, j);
  }
  MetricField M(m.dim, m.num_vertices());
  for (std::size_t v = 0; v < s.size(); ++v) M.set(v, std::sqrt(s[v]) * SmallMat::identity(m.dim));
  return M;
}

MetricField metric_from_hessian(const MatBatch& hessian, double alpha, int order, bool isotropic) {
  require(alpha > 0.0, "metric: alpha must be positive");
  require(order == 0 || order == 1, "metric: order must be 0 or 1");
  const int d = hessian.dim();
  const double expo = -1.0 / (order == 0 ? d + 4 : d + 2);
  MetricField M(d, hessian.size());
  for (std::size_t v = 0; v < hessian.size(); ++v) {
    const SymEig e = sym_eig(symmetrize(hessian.get(v)));
    SmallMat a(d);
    if (isotropic) {
      double nrm = 0.0;
      for (int i = 0; i < d; ++i) nrm = std::max(nrm, std::abs(e.lambda[i]));
      a = (nrm / alpha) * SmallMat::identity(d);
    } else {
      std::array<double, 3> lam{};
      for (int i = 0; i < d; ++i) lam[i] = std::abs(e.lambda[i]) / alpha;
      a = symmetrize(compose(e.q, std::span<const double>(lam.data(), d)));
    }
    a = a + SmallMat::identity(d);
    M.set(v, std::pow(det(a), expo) * a);
  }
  return M;
}

MetricField metric_hessian(std::span<const double> u, const Mesh& m, double alpha, int order) {
  return metric_from_hessian(grad_hessian_recovery(u, m).hessian, alpha, order, false);
}

MetricField metric_iso(std::span<const double> u, const Mesh& m, double alpha, int order) {
  return metric_from_hessian(grad_hessian_recovery(u, m).hessian, alpha, order, true);
}

double default_alpha(const MatBatch& hessian, const Mesh& m, int order) {
  const int d = m.dim;
  const double q = static_cast<double>(d) / (order == 0 ? d + 4 : d + 2);
  const auto vol = element_volumes(m);
  double s = 0.0, omega = 0.0;
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    SmallMat hk(d);
    for (int a = 0; a <= d; ++a) hk = hk + hessian.get(m.tri(k, a));
    const SymEig e = sym_eig(symmetrize((1.0 / (d + 1)) * hk));
    double nrm = 0.0;
    for (int i = 0; i < d; ++i) nrm = std::max(nrm, std::abs(e.lambda[i]));
    s += vol[k] * std::pow(nrm, q);
    omega += vol[k];
  }
  const double alpha = std::pow(s / omega, 1.0 / q);
  return alpha > 1e-12 ? alpha : 1.0;
}

MetricField metric_intersection(const MetricField& m1, const MetricField& m2) {
  require(m1.size() == m2.size() && m1.dim() == m2.dim(), "metric_intersection: size mismatch");
  check_spd(m1, "metric_intersection");
  check_spd(m2, "metric_intersection");
  const int d = m1.dim();
  MetricField out(d, m1.size());
  for (std::size_t v = 0; v < m1.size(); ++v) {
    const SmallMat a = m1.get(v), b = m2.get(v);
    bool diagonal = true;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (i != j && (a(i, j) != 0.0 || b(i, j) != 0.0)) diagonal = false;
    if (diagonal) {
      SmallMat r(d);
      for (int i = 0; i < d; ++i) r(i, i) = std::max(a(i, i), b(i, i));
      out.set(v, r);
      continue;
    }
    // a = L L^T
    SmallMat l(d);
    for (int j = 0; j < d; ++j) {
      double s = a(j, j);
      for (int k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
      l(j, j) = std::sqrt(s);
      for (int i = j + 1; i < d; ++i) {
        double t = a(i, j);
        for (int k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
        l(i, j) = t / l(j, j);
      }
    }
    const SmallMat li = inverse(l);
    const SymEig e = sym_eig(symmetrize(li * b * transpose(li)));
    std::array<double, 3> lam{};
    for (int i = 0; i < d; ++i) lam[i] = std::max(e.lambda[i], 1.0);
    const SmallMat lq = l * e.q;
    out.set(v, symmetrize(lq * SmallMat::diag(std::span<const double>(lam.data(), d)) * transpose(lq)));
  }
  return out;
}

MetricField metric_smoothing(const MetricField& M, int ncycles, const Mesh& m) {
  require(ncycles >= 0, "metric_smoothing: ncycles must be nonnegative");
  require(M.size() == m.num_vertices(), "metric_smoothing: size mismatch");
  const auto vol = element_volumes(m);
  MetricField cur = M;
  for (int c = 0; c < ncycles; ++c) {
    const MatBatch mk = element_means(cur, m);
    std::vector<double> w(m.num_vertices(), 0.0);
    std::vector<SmallMat> acc(m.num_vertices(), SmallMat(m.dim));
    for (std::size_t k = 0; k < m.num_elements(); ++k) {
      const SmallMat s = vol[k] * mk.get(k);
      for (int a = 0; a <= m.dim; ++a) {
        acc[m.tri(k, a)] = acc[m.tri(k, a)] + s;
        w[m.tri(k, a)] += vol[k];
      }
    }
    for (std::size_t v = 0; v < acc.size(); ++v)
      if (w[v] > 0.0) cur.set(v, (1.0 / w[v]) * acc[v]);
  }
  return cur;
}

MetricField metric_f2c(const MetricField& M_fine, const Mesh& fine, std::span<const Index> parent, const Mesh& coarse) {
  require(M_fine.size() == fine.num_vertices(), "metric_f2c: fine metric size mismatch");
  require(parent.size() == fine.num_elements(), "metric_f2c: parent map does not cover the fine mesh");
  const int d = coarse.dim;
  const auto fvol = element_volumes(fine);
  const MatBatch fk = element_means(M_fine, fine);
  std::vector<SmallMat> ck(coarse.num_elements(), SmallMat(d));
  std::vector<double> cw(coarse.num_elements(), 0.0);
  for (std::size_t k = 0; k < fine.num_elements(); ++k) {
    const Index p = parent[k];
    require(p >= 0 && static_cast<std::size_t>(p) < coarse.num_elements(), "metric_f2c: inconsistent parent map");
    ck[p] = ck[p] + fvol[k] * fk.get(k);
    cw[p] += fvol[k];
  }
  MetricField out(d, coarse.num_vertices());
  std::vector<SmallMat> acc(coarse.num_vertices(), SmallMat(d));
  std::vector<double> w(coarse.num_vertices(), 0.0);
  for (std::size_t k = 0; k < coarse.num_elements(); ++k) {
    require(cw[k] > 0.0, "metric_f2c: coarse element without children");
    for (int a = 0; a <= d; ++a) {
      acc[coarse.tri(k, a)] = acc[coarse.tri(k, a)] + ck[k];
      w[coarse.tri(k, a)] += cw[k];
    }
  }
  for (std::size_t v = 0; v < acc.size(); ++v) {
    require(w[v] > 0.0, "metric_f2c: isolated coarse vertex");
    out.set(v, (1.0 / w[v]) * acc[v]);
  }
  return out;
}

}  // namespace mmpde
