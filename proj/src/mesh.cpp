// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "mmpde/error.hpp"

namespace mmpde {

namespace {

using FacetKey = std::array<Index, 3>;

FacetKey sorted_key(std::span<const Index> ids) {
  FacetKey k{-1, -1, -1};
  std::copy(ids.begin(), ids.end(), k.begin());
  std::sort(k.begin(), k.begin() + ids.size());
  return k;
}

// Local vertex lists of the facet opposite local vertex a, ordered so the
// right-hand normal points away from a (for positive orientation).
constexpr int kFace2[3][2] = {{1, 2}, {2, 0}, {0, 1}};
constexpr int kFace3[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

std::vector<Index> local_facet(int dim, int a) {
  switch (dim) {
    case 1:
      return {a == 0 ? 1 : 0};
    case 2:
      return {kFace2[a][0], kFace2[a][1]};
    default:
      return {kFace3[a][0], kFace3[a][1], kFace3[a][2]};
  }
}

struct FacetRecord {
  FacetKey key;
  Index element;
  int local;
};

std::vector<FacetRecord> all_facets(const IndexTable& tri, int dim) {
  std::vector<FacetRecord> recs;
  recs.reserve(tri.rows() * (dim + 1));
  std::array<Index, 3> ids{};
  for (std::size_t k = 0; k < tri.rows(); ++k) {
    for (int a = 0; a <= dim; ++a) {
      const auto lf = local_facet(dim, a);
      for (int i = 0; i < dim; ++i) ids[i] = tri(k, lf[i]);
      recs.push_back({sorted_key({ids.data(), static_cast<std::size_t>(dim)}),
                      static_cast<Index>(k), a});
    }
  }
  std::sort(recs.begin(), recs.end(), [](const FacetRecord& x, const FacetRecord& y) {
    if (x.key != y.key) return x.key < y.key;
    return x.element < y.element;
  });
  return recs;
}

std::vector<double> facet_normal_raw(const RealTable& X, std::span<const Index> f, int dim) {
  std::vector<double> n(dim, 0.0);
  if (dim == 1) {
    n[0] = 1.0;
  } else if (dim == 2) {
    const double dx = X(f[1], 0) - X(f[0], 0);
    const double dy = X(f[1], 1) - X(f[0], 1);
    n[0] = dy;
    n[1] = -dx;
  } else {
    double u[3], v[3];
    for (int i = 0; i < 3; ++i) {
      u[i] = X(f[1], i) - X(f[0], i);
      v[i] = X(f[2], i) - X(f[0], i);
    }
    n[0] = u[1] * v[2] - u[2] * v[1];
    n[1] = u[2] * v[0] - u[0] * v[2];
    n[2] = u[0] * v[1] - u[1] * v[0];
  }
  return n;
}

void check_increasing(std::span<const double> x, const char* what) {
  require(x.size() >= 2, std::string(what) + ": grid needs at least 2 points");
  for (std::size_t i = 1; i < x.size(); ++i)
    require(x[i] > x[i - 1], std::string(what) + ": grid must be strictly increasing");
}

}  // namespace

double factorial(int d) {
  double f = 1.0;
  for (int i = 2; i <= d; ++i) f *= i;
  return f;
}

SmallMat edge_matrix(const RealTable& X, const IndexTable& tri, std::size_t k) {
  const int d = static_cast<int>(X.cols());
  SmallMat e(d);
  const Index v0 = tri(k, 0);
  for (int j = 0; j < d; ++j) {
    const Index vj = tri(k, j + 1);
    for (int i = 0; i < d; ++i) e(i, j) = X(vj, i) - X(v0, i);
  }
  return e;
}

double signed_volume(const RealTable& X, const IndexTable& tri, std::size_t k) {
  const int d = static_cast<int>(X.cols());
  return det(edge_matrix(X, tri, k)) / factorial(d);
}

std::vector<double> element_volumes(const Mesh& m) {
  std::vector<double> v(m.num_elements());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::abs(signed_volume(m.X, m.tri, k));
  return v;
}

double total_volume(const Mesh& m) {
  const auto v = element_volumes(m);
  return std::accumulate(v.begin(), v.end(), 0.0);
}

double min_signed_volume(const RealTable& X, const IndexTable& tri) {
  double vmin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tri.rows(); ++k) vmin = std::min(vmin, signed_volume(X, tri, k));
  return vmin;
}

double bounding_diameter(const RealTable& X) {
  if (X.rows() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    double lo = X(0, j), hi = X(0, j);
    for (std::size_t i = 1; i < X.rows(); ++i) {
      lo = std::min(lo, X(i, j));
      hi = std::max(hi, X(i, j));
    }
    s += (hi - lo) * (hi - lo);
  }
  return std::sqrt(s);
}

SmallMat equilateral_edge_matrix(int d) {
  SmallMat e(d);
  switch (d) {
    case 1:
      e(0, 0) = 1.0;
      break;
    case 2:
      e(0, 0) = 1.0;
      e(0, 1) = 0.5;
      e(1, 1) = std::sqrt(3.0) / 2.0;
      break;
    case 3:
      e(0, 0) = 1.0;
      e(0, 1) = 0.5;
      e(1, 1) = std::sqrt(3.0) / 2.0;
      e(0, 2) = 0.5;
      e(1, 2) = std::sqrt(3.0) / 6.0;
      e(2, 2) = std::sqrt(2.0 / 3.0);
      break;
    default:
      break;
  }
  return e;
}

Mesh make_mesh(int dim, RealTable X, IndexTable tri) {
  require(dim >= 1 && dim <= 3, "mesh: dimension must be 1, 2 or 3");
  require(X.cols() == static_cast<std::size_t>(dim) || X.rows() == 0,
          "mesh: coordinate table must have d columns");
  require(tri.cols() == static_cast<std::size_t>(dim + 1) || tri.rows() == 0,
          "mesh: connectivity must have d+1 columns");
  const Index nv = static_cast<Index>(X.rows());
  for (Index v : tri.data())
    require(v >= 0 && v < nv, "mesh: connectivity references an invalid vertex id");
  Mesh m;
  m.dim = dim;
  m.X = X.rows() == 0 ? RealTable(0, dim) : std::move(X);
  m.tri = std::move(tri);
  if (m.tri.rows() == 0) m.tri = IndexTable(0, dim + 1);
  for (std::size_t k = 0; k < m.tri.rows(); ++k) {
    const double vol = signed_volume(m.X, m.tri, k);
    if (vol < 0.0) std::swap(m.tri(k, 0), m.tri(k, 1));
  }
  m.tri_bf = free_boundary(m.dim, m.X, m.tri);
  return m;
}

IndexTable free_boundary(int dim, const RealTable& X, const IndexTable& tri) {
  const auto recs = all_facets(tri, dim);
  std::vector<char> is_boundary_slot(tri.rows() * (dim + 1), 0);
  for (std::size_t i = 0; i < recs.size();) {
    std::size_t j = i + 1;
    while (j < recs.size() && recs[j].key == recs[i].key) ++j;
    if (j - i == 1) is_boundary_slot[recs[i].element * (dim + 1) + recs[i].local] = 1;
    i = j;
  }
  IndexTable bf(0, dim);
  std::vector<Index> row(dim);
  for (std::size_t k = 0; k < tri.rows(); ++k) {
    const bool positive = signed_volume(X, tri, k) >= 0.0;
    for (int a = 0; a <= dim; ++a) {
      if (!is_boundary_slot[k * (dim + 1) + a]) continue;
      const auto lf = local_facet(dim, a);
      for (int i = 0; i < dim; ++i) row[i] = tri(k, lf[i]);
      if (!positive && dim > 1) std::swap(row[0], row[1]);
      bf.append_row(row);
    }
  }
  return bf;
}

VertexStar vertex_elements(std::size_t num_vertices, const IndexTable& tri) {
  VertexStar s;
  s.offsets.assign(num_vertices + 1, 0);
  for (Index v : tri.data()) ++s.offsets[v + 1];
  for (std::size_t i = 0; i < num_vertices; ++i) s.offsets[i + 1] += s.offsets[i];
  s.elements.resize(tri.data().size());
  std::vector<Index> fill(s.offsets.begin(), s.offsets.end() - 1);
  for (std::size_t k = 0; k < tri.rows(); ++k)
    for (std::size_t a = 0; a < tri.cols(); ++a) s.elements[fill[tri(k, a)]++] = static_cast<Index>(k);
  return s;
}

IndexTable element_neighbors(const IndexTable& tri, int dim) {
  IndexTable nb(tri.rows(), dim + 1, -1);
  const auto recs = all_facets(tri, dim);
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    if (recs[i].key == recs[i + 1].key) {
      nb(recs[i].element, recs[i].local) = recs[i + 1].element;
      nb(recs[i + 1].element, recs[i + 1].local) = recs[i].element;
    }
  }
  return nb;
}

std::vector<Index> boundary_facet_elements(const Mesh& m) {
  const auto recs = all_facets(m.tri, m.dim);
  std::vector<Index> out(m.num_boundary_facets(), -1);
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) {
    const FacetKey key = sorted_key(m.tri_bf.row(f));
    auto it = std::lower_bound(recs.begin(), recs.end(), key,
                               [](const FacetRecord& r, const FacetKey& k) { return r.key < k; });
    require(it != recs.end() && it->key == key,
            "boundary facet " + std::to_string(f) + " does not belong to any element");
    out[f] = it->element;
  }
  return out;
}

std::vector<std::vector<Index>> vertex_neighbors(const Mesh& m) {
  std::vector<std::vector<Index>> nb(m.num_vertices());
  for (std::size_t k = 0; k < m.num_elements(); ++k)
    for (int a = 0; a <= m.dim; ++a)
      for (int b = 0; b <= m.dim; ++b) nb[m.tri(k, a)].push_back(m.tri(k, b));
  for (auto& v : nb) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return nb;
}

// ---- generators ---------------------------------------------------------------

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> x(n + 1);
  for (std::size_t i = 0; i <= n; ++i) x[i] = a + (b - a) * static_cast<double>(i) / n;
  x[n] = b;
  return x;
}

Mesh line_mesh(std::span<const double> x) {
  check_increasing(x, "line_mesh");
  RealTable X(x.size(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) X(i, 0) = x[i];
  IndexTable tri(x.size() - 1, 2);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    tri(i, 0) = static_cast<Index>(i);
    tri(i, 1) = static_cast<Index>(i + 1);
  }
  return make_mesh(1, std::move(X), std::move(tri));
}

Mesh rect2tri(std::span<const double> x, std::span<const double> y, int job) {
  check_increasing(x, "rect2tri");
  check_increasing(y, "rect2tri");
  require(job >= 1 && job <= 3, "rect2tri: job must be 1, 2 or 3");
  const std::size_t nx = x.size(), ny = y.size();
  const std::size_t ncell = (nx - 1) * (ny - 1);
  RealTable X(nx * ny + (job == 1 ? ncell : 0), 2);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      X(j * nx + i, 0) = x[i];
      X(j * nx + i, 1) = y[j];
    }
  IndexTable tri(0, 3);
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const Index p00 = static_cast<Index>(j * nx + i), p10 = p00 + 1;
      const Index p01 = static_cast<Index>((j + 1) * nx + i), p11 = p01 + 1;
      if (job == 1) {
        const Index c = static_cast<Index>(nx * ny + j * (nx - 1) + i);
        X(c, 0) = 0.5 * (x[i] + x[i + 1]);
        X(c, 1) = 0.5 * (y[j] + y[j + 1]);
        for (auto t : {std::array<Index, 3>{p00, p10, c}, {p10, p11, c}, {p11, p01, c}, {p01, p00, c}})
          tri.append_row(t);
      } else if (job == 2) {
        tri.append_row(std::array<Index, 3>{p00, p10, p11});
        tri.append_row(std::array<Index, 3>{p00, p11, p01});
      } else {
        tri.append_row(std::array<Index, 3>{p00, p10, p01});
        tri.append_row(std::array<Index, 3>{p10, p11, p01});
      }
    }
  }
  return make_mesh(2, std::move(X), std::move(tri));
}

Mesh cube2tet(std::span<const double> x, std::span<const double> y, std::span<const double> z) {
  check_increasing(x, "cube2tet");
  check_increasing(y, "cube2tet");
  check_increasing(z, "cube2tet");
  const std::size_t nx = x.size(), ny = y.size(), nz = z.size();
  RealTable X(nx * ny * nz, 3);
  auto id = [&](std::size_t i, std::size_t j, std::size_t k) {
    return static_cast<Index>((k * ny + j) * nx + i);
  };
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        X(id(i, j, k), 0) = x[i];
        X(id(i, j, k), 1) = y[j];
        X(id(i, j, k), 2) = z[k];
      }
  // Kuhn subdivision: one tetrahedron per monotone path 000 -> 111.
  static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                      {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  IndexTable tri(0, 4);
  for (std::size_t k = 0; k + 1 < nz; ++k)
    for (std::size_t j = 0; j + 1 < ny; ++j)
      for (std::size_t i = 0; i + 1 < nx; ++i)
        for (const auto& p : perms) {
          std::array<std::size_t, 3> c{i, j, k};
          std::array<Index, 4> t{};
          t[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            t[s + 1] = id(c[0], c[1], c[2]);
          }
          tri.append_row(t);
        }
  return make_mesh(3, std::move(X), std::move(tri));
}

Mesh circle2tri(int jmax) {
  require(jmax >= 1, "circle2tri: jmax must be >= 1");
  std::vector<std::vector<Index>> ring(jmax + 1);
  RealTable X(0, 2);
  X.append_row(std::array<double, 2>{0.0, 0.0});
  ring[0] = {0};
  for (int j = 1; j <= jmax; ++j) {
    const int n = 6 * j;
    const double r = static_cast<double>(j) / jmax;
    for (int k = 0; k < n; ++k) {
      const double th = 2.0 * std::numbers::pi * k / n;
      ring[j].push_back(static_cast<Index>(X.rows()));
      X.append_row(std::array<double, 2>{r * std::cos(th), r * std::sin(th)});
    }
  }
  IndexTable tri(0, 3);
  for (int j = 1; j <= jmax; ++j) {
    const auto& in = ring[j - 1];
    const auto& out = ring[j];
    const std::size_t nin = in.size(), nout = out.size();
    if (j == 1) {
      for (std::size_t b = 0; b < nout; ++b)
        tri.append_row(std::array<Index, 3>{in[0], out[b], out[(b + 1) % nout]});
      continue;
    }
    std::size_t a = 0, b = 0;
    while (a < nin || b < nout) {
      const double next_in = static_cast<double>(a + 1) / nin;
      const double next_out = static_cast<double>(b + 1) / nout;
      if (b < nout && (a >= nin || next_out <= next_in)) {
        tri.append_row(std::array<Index, 3>{in[a % nin], out[b % nout], out[(b + 1) % nout]});
        ++b;
      } else {
        tri.append_row(std::array<Index, 3>{in[a % nin], out[b % nout], in[(a + 1) % nin]});
        ++a;
      }
    }
  }
  return make_mesh(2, std::move(X), std::move(tri));
}

// ---- normals -------------------------------------------------------------------

double facet_measure(const Mesh& m, std::size_t f) {
  if (m.dim == 1) return 1.0;
  const auto n = facet_normal_raw(m.X, m.tri_bf.row(f), m.dim);
  double s = 0.0;
  for (double c : n) s += c * c;
  return m.dim == 2 ? std::sqrt(s) : 0.5 * std::sqrt(s);
}

RealTable face_normals(const Mesh& m) {
  const int d = m.dim;
  RealTable V(m.num_boundary_facets(), d);
  const auto owner = boundary_facet_elements(m);
  const double scale = bounding_diameter(m.X);
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) {
    auto n = facet_normal_raw(m.X, m.tri_bf.row(f), d);
    // Orientation test against the owning element's centroid.
    std::vector<double> fc(d, 0.0), ec(d, 0.0);
    for (int a = 0; a < d; ++a)
      for (int i = 0; i < d; ++i) fc[i] += m.X(m.tri_bf(f, a), i) / d;
    for (int a = 0; a <= d; ++a)
      for (int i = 0; i < d; ++i) ec[i] += m.X(m.tri(owner[f], a), i) / (d + 1);
    double len = 0.0, dot = 0.0;
    for (int i = 0; i < d; ++i) {
      len += n[i] * n[i];
      dot += n[i] * (fc[i] - ec[i]);
    }
    len = std::sqrt(len);
    if (!(len > 1e-14 * std::pow(std::max(scale, 1e-300), d - 1)))
      throw Error(ErrorCode::DegenerateElement,
                  "face_normals: degenerate boundary facet " + std::to_string(f));
    const double sgn = dot < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < d; ++i) V(f, i) = sgn * n[i] / len;
  }
  return V;
}

RealTable vertex_normals(const Mesh& m) {
  const int d = m.dim;
  const RealTable fn = face_normals(m);
  RealTable acc(m.num_vertices(), d, 0.0);
  std::vector<char> on_boundary(m.num_vertices(), 0);
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) {
    const double w = facet_measure(m, f);
    for (int a = 0; a < d; ++a) {
      const Index v = m.tri_bf(f, a);
      on_boundary[v] = 1;
      for (int i = 0; i < d; ++i) acc(v, i) += w * fn(f, i);
    }
  }
  const double interior = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    double len = 0.0;
    for (int i = 0; i < d; ++i) len += acc(v, i) * acc(v, i);
    len = std::sqrt(len);
    for (int i = 0; i < d; ++i)
      acc(v, i) = (on_boundary[v] && len > 0.0) ? acc(v, i) / len : interior;
  }
  return acc;
}

std::vector<Index> find_corners(const Mesh& m, double angle_deg) {
  const int d = m.dim;
  std::vector<Index> corners;
  if (m.num_boundary_facets() == 0) return corners;
  if (d == 1) {
    for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) corners.push_back(m.tri_bf(f, 0));
    std::sort(corners.begin(), corners.end());
    return corners;
  }
  const RealTable fn = face_normals(m);
  const double cos_tol = std::cos(angle_deg * std::numbers::pi / 180.0);
  // Distinct normal directions seen at each vertex.
  std::vector<std::vector<std::array<double, 3>>> dirs(m.num_vertices());
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) {
    std::array<double, 3> n{};
    for (int i = 0; i < d; ++i) n[i] = fn(f, i);
    for (int a = 0; a < d; ++a) {
      auto& list = dirs[m.tri_bf(f, a)];
      bool found = false;
      for (const auto& g : list) {
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += g[i] * n[i];
        if (dot >= cos_tol) {
          found = true;
          break;
        }
      }
      if (!found) list.push_back(n);
    }
  }
  const std::size_t threshold = d == 2 ? 2 : 3;
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (dirs[v].size() >= threshold) corners.push_back(static_cast<Index>(v));
  return corners;
}

// ---- editing ----------------------------------------------------------------------

Mesh mesh_merge(const Mesh& a, const Mesh& b) {
  if (b.num_vertices() == 0) return a;
  if (a.num_vertices() == 0) return b;
  require(a.dim == b.dim, "mesh_merge: meshes must have the same dimension");
  const int d = a.dim;
  RealTable all(a.num_vertices() + b.num_vertices(), d);
  for (std::size_t i = 0; i < a.num_vertices(); ++i)
    for (int j = 0; j < d; ++j) all(i, j) = a.X(i, j);
  for (std::size_t i = 0; i < b.num_vertices(); ++i)
    for (int j = 0; j < d; ++j) all(a.num_vertices() + i, j) = b.X(i, j);
  const double tol = 1e-10 * bounding_diameter(all);

  // Sort a's vertices by first coordinate for windowed coincidence search.
  std::vector<Index> order(a.num_vertices());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index p, Index q) { return a.X(p, 0) < a.X(q, 0); });

  RealTable X = a.X;
  std::vector<Index> map_b(b.num_vertices(), -1);
  for (std::size_t i = 0; i < b.num_vertices(); ++i) {
    const double x0 = b.X(i, 0);
    auto lo = std::lower_bound(order.begin(), order.end(), x0 - tol,
                               [&](Index p, double val) { return a.X(p, 0) < val; });
    for (auto it = lo; it != order.end() && a.X(*it, 0) <= x0 + tol; ++it) {
      double dist = 0.0;
      for (int j = 0; j < d; ++j) dist = std::max(dist, std::abs(a.X(*it, j) - b.X(i, j)));
      if (dist <= tol) {
        map_b[i] = *it;
        break;
      }
    }
    if (map_b[i] < 0) {
      map_b[i] = static_cast<Index>(X.rows());
      X.append_row(b.X.row(i));
    }
  }
  IndexTable tri = a.tri;
  std::vector<Index> row(d + 1);
  for (std::size_t k = 0; k < b.num_elements(); ++k) {
    for (int j = 0; j <= d; ++j) row[j] = map_b[b.tri(k, j)];
    tri.append_row(row);
  }
  return make_mesh(d, std::move(X), std::move(tri));
}

Mesh mesh_remove_nodes(const Mesh& m, std::span<const Index> ids) {
  const std::size_t nv = m.num_vertices();
  std::vector<char> removed(nv, 0);
  for (Index v : ids) {
    require(v >= 0 && static_cast<std::size_t>(v) < nv,
            "mesh_remove_nodes: vertex id out of range");
    removed[v] = 1;
  }
  if (ids.empty()) return m;
  std::vector<char> used(nv, 0);
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    bool keep = true;
    for (int a = 0; a <= m.dim; ++a) keep = keep && !removed[m.tri(k, a)];
    if (!keep) continue;
    kept.push_back(k);
    for (int a = 0; a <= m.dim; ++a) used[m.tri(k, a)] = 1;
  }
  require(!kept.empty(), "mesh_remove_nodes: removal leaves no elements");
  std::vector<Index> newid(nv, -1);
  RealTable X(0, m.dim);
  for (std::size_t v = 0; v < nv; ++v) {
    if (!used[v]) continue;
    newid[v] = static_cast<Index>(X.rows());
    X.append_row(m.X.row(v));
  }
  IndexTable tri(kept.size(), m.dim + 1);
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (int a = 0; a <= m.dim; ++a) tri(i, a) = newid[m.tri(kept[i], a)];
  return make_mesh(m.dim, std::move(X), std::move(tri));
}

}  // namespace mmpde
