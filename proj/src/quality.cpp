// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/quality.hpp"

#include <algorithm>
#include <cmath>

#include "mmpde/error.hpp"
#include "mmpde/metric.hpp"

namespace mmpde {

std::vector<SmallMat> computational_edges(const Mesh& m, const RealTable* xi_ref) {
  const std::size_t n = m.num_elements();
  std::vector<SmallMat> out(n);
  if (xi_ref) {
    require(xi_ref->rows() == m.num_vertices() && xi_ref->cols() == static_cast<std::size_t>(m.dim),
            "reference coordinates must match the mesh vertices");
    for (std::size_t k = 0; k < n; ++k) out[k] = edge_matrix(*xi_ref, m.tri, k);
    return out;
  }
  SmallMat e = equilateral_edge_matrix(m.dim);
  const double v1 = det(e) / factorial(m.dim);
  const double s = std::pow(1.0 / (static_cast<double>(n) * v1), 1.0 / m.dim);
  e = s * e;
  std::fill(out.begin(), out.end(), e);
  return out;
}

ElementQuality element_quality(const Mesh& m, const MatBatch& M, const RealTable* xi_ref) {
  require(M.size() == m.num_vertices() && M.dim() == m.dim, "metric size does not match the mesh");
  check_spd(M, "quality_measures");
  const int d = m.dim;
  const std::size_t n = m.num_elements();
  const auto ehat = computational_edges(m, xi_ref);
  const double fact = factorial(d);

  ElementQuality q;
  q.geo.resize(n);
  q.eq.resize(n);
  q.ali.resize(n);
  q.comp_volume.resize(n);
  std::vector<double> rho(n);
  double sigma = 0.0, omega_c = 0.0;
  auto ali = [d](const SmallMat& s) {
    const double dt = det(s);
    require(dt > 0.0, "degenerate element in quality measure", ErrorCode::DegenerateElement);
    return trace(s) / (d * std::pow(dt, 1.0 / d));
  };
  for (std::size_t k = 0; k < n; ++k) {
    const SmallMat e = edge_matrix(m, k);
    const double de = det(e);
    require(de != 0.0, "degenerate element in quality measure", ErrorCode::DegenerateElement);
    const SmallMat j = ehat[k] * inverse(e, de);
    SmallMat mk(d);
    for (int a = 0; a <= d; ++a) mk = mk + M.get(m.tri(k, a));
    mk = (1.0 / (d + 1)) * mk;
    const double dm = det(mk);
    const SmallMat jt = transpose(j);
    q.ali[k] = ali(j * inverse(mk, dm) * jt);
    q.geo[k] = ali(j * jt);
    rho[k] = std::abs(de) / fact * std::sqrt(dm);
    sigma += rho[k];
    q.comp_volume[k] = std::abs(det(ehat[k])) / fact;
    omega_c += q.comp_volume[k];
  }
  for (std::size_t k = 0; k < n; ++k) q.eq[k] = (rho[k] / sigma) / (q.comp_volume[k] / omega_c);
  return q;
}

namespace {

double aggregate(const std::vector<double>& v, const std::vector<double>& w, bool linf) {
  if (linf) return v.empty() ? 1.0 : *std::max_element(v.begin(), v.end());
  double s = 0.0, ws = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    s += w[k] * v[k] * v[k];
    ws += w[k];
  }
  return std::sqrt(s / ws);
}

}  // namespace

QualityReport quality_measures(const Mesh& m, const MatBatch& M, bool linf, const RealTable* xi_ref) {
  const ElementQuality q = element_quality(m, M, xi_ref);
  QualityReport r;
  r.qgeo = aggregate(q.geo, q.comp_volume, linf);
  r.qeq = aggregate(q.eq, q.comp_volume, linf);
  r.qali = aggregate(q.ali, q.comp_volume, linf);
  return r;
}

CombinedQuality quality_measure2(const Mesh& m, const MatBatch& M, const RealTable* xi_ref, double p) {
  const ElementQuality q = element_quality(m, M, xi_ref);
  const double dp2 = m.dim * p / 2.0;
  std::vector<double> comb(q.eq.size());
  for (std::size_t k = 0; k < comb.size(); ++k)
    comb[k] = std::pow(q.ali[k], dp2) * std::pow(std::max(q.eq[k], 1.0 / q.eq[k]), p);
  return {aggregate(comb, q.comp_volume, true), aggregate(comb, q.comp_volume, false)};
}

}  // namespace mmpde
