// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmpde/error.hpp"
#include "mmpde/mesh.hpp"

namespace mmpde {

namespace {
constexpr double kInsideTol = 1e-12;
constexpr double kSnapTol = 1e-10;
}  // namespace

PointLocator::PointLocator(int dim, const RealTable& X, const IndexTable& tri)
    : dim_(dim), X_(X), tri_(tri) {
  require(tri.rows() > 0, "point location: mesh has no elements");
  neighbors_ = element_neighbors(tri, dim);
  star_ = vertex_elements(X.rows(), tri);
  degenerate_.assign(tri.rows(), 0);
  const double h = bounding_diameter(X);
  const double vtol = 1e-13 * std::pow(std::max(h, 1e-300), dim) / factorial(dim);
  for (std::size_t k = 0; k < tri.rows(); ++k)
    degenerate_[k] = std::abs(signed_volume(X, tri, k)) <= vtol;
}

std::array<double, 4> PointLocator::barycentric(std::size_t k, std::span<const double> p) const {
  const SmallMat e = edge_matrix(X_, tri_, k);
  const SmallMat inv = inverse(e);
  std::array<double, 4> b{};
  const Index v0 = tri_(k, 0);
  double sum = 0.0;
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) s += inv(i, j) * (p[j] - X_(v0, j));
    b[i + 1] = s;
    sum += s;
  }
  b[0] = 1.0 - sum;
  return b;
}

Index PointLocator::nearest_vertex(std::span<const double> p) const {
  Index best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < X_.rows(); ++v) {
    if (star_.offsets[v + 1] == star_.offsets[v]) continue;
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += (X_(v, i) - p[i]) * (X_(v, i) - p[i]);
    if (s < bd) {
      bd = s;
      best = static_cast<Index>(v);
    }
  }
  return best;
}

Location PointLocator::locate(std::span<const double> p) const { return locate(p, -1); }

Location PointLocator::locate(std::span<const double> p, Index hint) const {
  auto min_of = [&](const std::array<double, 4>& b) {
    return *std::min_element(b.begin(), b.begin() + dim_ + 1);
  };
  // Walk from an element around the nearest vertex.
  Index k = -1;
  if (hint >= 0 && static_cast<std::size_t>(hint) < tri_.rows() && !degenerate_[hint]) {
    k = hint;
  } else {
    for (Index e : star_.of(nearest_vertex(p)))
      if (!degenerate_[e]) {
        k = e;
        break;
      }
  }
  for (std::size_t steps = 0; k >= 0 && steps < tri_.rows(); ++steps) {
    const auto b = barycentric(k, p);
    int worst = 0;
    for (int a = 1; a <= dim_; ++a)
      if (b[a] < b[worst]) worst = a;
    if (b[worst] >= -kInsideTol) return {k, b, true};
    const Index next = neighbors_(k, worst);
    if (next < 0 || degenerate_[next]) break;
    k = next;
  }
  // Exhaustive fallback; keeps the element with the largest minimal
  // barycentric coordinate.
  Location best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < tri_.rows(); ++e) {
    if (degenerate_[e]) continue;
    const auto b = barycentric(e, p);
    const double mn = min_of(b);
    if (mn > best_min) {
      best_min = mn;
      best = {static_cast<Index>(e), b, false};
      if (mn >= -kInsideTol) break;
    }
  }
  require(best.element >= 0, "point location: no valid element found", ErrorCode::DegenerateElement);
  if (best_min >= -kSnapTol) {
    double s = 0.0;
    for (int a = 0; a <= dim_; ++a) {
      best.bary[a] = std::max(best.bary[a], 0.0);
      s += best.bary[a];
    }
    for (int a = 0; a <= dim_; ++a) best.bary[a] /= s;
    best.inside = true;
  }
  return best;
}

RealTable lin_interp(const RealTable& f, const Mesh& m, const RealTable& qp, bool use_delaunay) {
  require(m.num_vertices() > 0 && (use_delaunay || m.num_elements() > 0),
          "lin_interp: empty mesh");
  require(f.rows() == m.num_vertices(), "lin_interp: data must have one row per vertex");
  require(qp.cols() == static_cast<std::size_t>(m.dim) || qp.rows() == 0,
          "lin_interp: query points must have d columns");
  IndexTable dt;
  if (use_delaunay) dt = delaunay(m.dim, m.X);
  const IndexTable& tri = use_delaunay ? dt : m.tri;
  PointLocator loc(m.dim, m.X, tri);
  RealTable out(qp.rows(), f.cols(), 0.0);
  for (std::size_t q = 0; q < qp.rows(); ++q) {
    const Location l = loc.locate(qp.row(q));
    for (int a = 0; a <= m.dim; ++a) {
      const Index v = tri(l.element, a);
      for (std::size_t c = 0; c < f.cols(); ++c) out(q, c) += l.bary[a] * f(v, c);
    }
  }
  return out;
}

}  // namespace mmpde
