// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "mmpde/error.hpp"
#include "mmpde/parallel.hpp"
#include "mmpde/quadrature.hpp"

namespace mmpde {

void PdeDefinition::validate(const Mesh& m) const {
  require(npde >= 1, "pdedef: npde must be positive");
  require(static_cast<bool>(volume_int), "pdedef: volume integrand is required");
  require(bf_mark.size() == m.num_boundary_facets(), "pdedef: bf_mark needs one entry per boundary facet");
  require(bftype.rows() == m.num_boundary_facets() && (bftype.cols() == static_cast<std::size_t>(npde) || bftype.rows() == 0),
          "pdedef: bftype must be N_bf x npde");
  bool any_dirichlet = false, any_neumann = false;
  for (Index b : bftype.data()) {
    require(b == 0 || b == 1, "pdedef: bftype entries must be 0 or 1");
    any_dirichlet = any_dirichlet || b == 1;
    any_neumann = any_neumann || b == 0;
  }
  require(!any_dirichlet || static_cast<bool>(dirichlet_res), "pdedef: Dirichlet facets need a residual callback");
  (void)any_neumann;
}

namespace {

constexpr std::size_t kChunk = 128;
const double kFdStep = std::sqrt(std::numeric_limits<double>::epsilon());

void check_batch(const std::vector<double>& f, std::size_t n, const char* who) {
  if (f.size() != n)
    throw Error(ErrorCode::BadCallbackShape, std::string(who) + " returned " + std::to_string(f.size()) +
                                                 " values for a batch of " + std::to_string(n));
}

/// Connectivity-dependent data shared by all evaluations on one mesh.
struct Layout {
  int d = 0, npde = 0, nloc = 0;
  std::size_t nv = 0;
  std::vector<Index> facet_elem;
  std::vector<std::array<int, 3>> facet_local;
  std::vector<std::vector<Index>> neumann;  // facets per component
  std::vector<char> dirichlet;              // per row
  std::vector<int> dir_mark;                // per row
  std::vector<std::vector<Index>> dir_vertices;
  QuadRule vol_rule, facet_rule;

  Layout(const Mesh& m, const PdeDefinition& pde) {
    d = m.dim;
    npde = pde.npde;
    nloc = d + 1;
    nv = m.num_vertices();
    vol_rule = simplex_rule(d, 2);
    facet_rule = simplex_rule(d - 1, 2);
    const std::size_t nbf = m.num_boundary_facets();
    facet_elem = boundary_facet_elements(m);
    facet_local.resize(nbf);
    for (std::size_t f = 0; f < nbf; ++f) {
      const Index k = facet_elem[f];
      for (int j = 0; j < d; ++j) {
        int loc = -1;
        for (int a = 0; a < nloc; ++a)
          if (m.tri(k, a) == m.tri_bf(f, j)) loc = a;
        require(loc >= 0, "boundary facet does not belong to its element", ErrorCode::Internal);
        facet_local[f][j] = loc;
      }
    }
    neumann.assign(npde, {});
    dirichlet.assign(nv * npde, 0);
    dir_mark.assign(nv * npde, 0);
    dir_vertices.assign(npde, {});
    for (std::size_t f = 0; f < nbf; ++f)
      for (int i = 0; i < npde; ++i) {
        if (pde.bftype(f, i) == 0) {
          neumann[i].push_back(static_cast<Index>(f));
          continue;
        }
        for (int j = 0; j < d; ++j) {
          const std::size_t r = m.tri_bf(f, j) * npde + i;
          dirichlet[r] = 1;
          dir_mark[r] = pde.bf_mark[f];
        }
      }
    for (int i = 0; i < npde; ++i)
      for (std::size_t v = 0; v < nv; ++v)
        if (dirichlet[v * npde + i]) dir_vertices[i].push_back(static_cast<Index>(v));
  }
};

/// Element (or facet-owner element) geometry for a batch of cells.
struct CellGeom {
  std::vector<double> grad;  // cell, local vertex, direction
  std::vector<double> w;     // cell, quadrature point: weight times measure
  RealTable x, xd;           // per quadrature point
  std::vector<std::array<double, 4>> bary;  // per quadrature point (element coordinates)
  std::size_t nq = 0;        // points per cell
};

/// Evaluation context: mesh state at one instant.
struct Context {
  const Layout& L;
  const Mesh& m;
  const RealTable& X;
  const RealTable& Xdot;
  const PdeDefinition& pde;
  double t;
};

void element_gradients(const Context& c, Index k, double* grad, double& vol) {
  const int d = c.L.d;
  SmallMat e(d);
  const Index v0 = c.m.tri(k, 0);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) e(i, j) = c.X(c.m.tri(k, j + 1), i) - c.X(v0, i);
  const double de = det(e);
  if (!(de > 0.0))
    throw Error(ErrorCode::DegenerateElement, "fem: degenerate or inverted element " + std::to_string(k));
  const SmallMat inv = inverse(e, de);
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int a = 1; a <= d; ++a) {
      grad[a * d + i] = inv(a - 1, i);
      s += inv(a - 1, i);
    }
    grad[i] = -s;
  }
  vol = de / factorial(d);
}

double facet_size(const Context& c, std::size_t f) {
  const int d = c.L.d;
  if (d == 1) return 1.0;
  const auto p = [&](int j, int i) { return c.X(c.m.tri_bf(f, j), i); };
  if (d == 2) return std::hypot(p(1, 0) - p(0, 0), p(1, 1) - p(0, 1));
  double a[3], b[3];
  for (int i = 0; i < 3; ++i) {
    a[i] = p(1, i) - p(0, i);
    b[i] = p(2, i) - p(0, i);
  }
  const double cx = a[1] * b[2] - a[2] * b[1], cy = a[2] * b[0] - a[0] * b[2], cz = a[0] * b[1] - a[1] * b[0];
  return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

/// Geometry for cells = elements (facets = false) or boundary facets.
CellGeom make_geom(const Context& c, std::span<const Index> cells, bool facets) {
  const Layout& L = c.L;
  const int d = L.d, nloc = L.nloc;
  const QuadRule& rule = facets ? L.facet_rule : L.vol_rule;
  CellGeom g;
  g.nq = rule.size();
  const std::size_t n = cells.size(), nqt = n * g.nq;
  g.grad.resize(n * nloc * d);
  g.w.resize(nqt);
  g.x.resize(nqt, d);
  g.xd.resize(nqt, d);
  g.bary.resize(nqt);
  for (std::size_t e = 0; e < n; ++e) {
    const Index k = facets ? L.facet_elem[cells[e]] : cells[e];
    double vol = 0.0;
    element_gradients(c, k, g.grad.data() + e * nloc * d, vol);
    const double meas = facets ? facet_size(c, cells[e]) : vol;
    for (std::size_t q = 0; q < g.nq; ++q) {
      const std::size_t p = e * g.nq + q;
      std::array<double, 4> b{};
      if (facets) {
        for (int j = 0; j < d; ++j) b[L.facet_local[cells[e]][j]] = rule.bary[q][j];
      } else {
        b = rule.bary[q];
      }
      g.bary[p] = b;
      g.w[p] = rule.weights[q] * meas;
      for (int a = 0; a < nloc; ++a) {
        const Index v = c.m.tri(k, a);
        for (int i = 0; i < d; ++i) {
          g.x(p, i) += b[a] * c.X(v, i);
          g.xd(p, i) += b[a] * c.Xdot(v, i);
        }
      }
    }
  }
  return g;
}

/// Local residuals r[cell][b][i] of a batch given local values
/// U[cell][a][comp] and Udot[cell][a][comp].
void eval_cells(const Context& c, std::span<const Index> cells, bool facets, const CellGeom& g, const double* U,
                const double* Ud, double* r) {
  const Layout& L = c.L;
  const int d = L.d, nloc = L.nloc, np = L.npde;
  const std::size_t n = cells.size(), nq = g.nq, nqt = n * nq;
  RealTable u(nqt, np), du(nqt, d * np), ut(nqt, np), dv(nqt, d), x = g.x;
  std::vector<double> v(nqt);
  for (std::size_t e = 0; e < n; ++e) {
    const double* gr = g.grad.data() + e * nloc * d;
    const double* ue = U + e * nloc * np;
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t p = e * nq + q;
      for (int a = 0; a < nloc; ++a) {
        const double phi = g.bary[p][a];
        for (int k = 0; k < np; ++k) {
          const double val = ue[a * np + k];
          u(p, k) += phi * val;
          for (int i = 0; i < d; ++i) du(p, k * d + i) += gr[a * d + i] * val;
          if (Ud) ut(p, k) += phi * Ud[(e * nloc + a) * np + k];
        }
      }
      if (Ud)
        for (int k = 0; k < np; ++k)
          for (int i = 0; i < d; ++i) ut(p, k) -= du(p, k * d + i) * g.xd(p, i);
    }
  }
  std::fill(r, r + n * nloc * np, 0.0);
  std::vector<int> marks;
  if (facets) {
    marks.resize(nqt);
    for (std::size_t e = 0; e < n; ++e)
      for (std::size_t q = 0; q < nq; ++q) marks[e * nq + q] = c.pde.bf_mark[cells[e]];
  }
  for (int i = 0; i < np; ++i) {
    for (int b = 0; b < nloc; ++b) {
      for (std::size_t e = 0; e < n; ++e) {
        const double* gr = g.grad.data() + (e * nloc + b) * d;
        for (std::size_t q = 0; q < nq; ++q) {
          const std::size_t p = e * nq + q;
          v[p] = g.bary[p][b];
          for (int k = 0; k < d; ++k) dv(p, k) = gr[k];
        }
      }
      std::vector<double> f;
      if (facets) {
        f = c.pde.boundary_int(BoundaryArgs{du, u, v, x, c.t, i, marks});
        check_batch(f, nqt, "boundary integrand");
      } else {
        f = c.pde.volume_int(VolumeArgs{du, u, ut, dv, v, x, c.t, i});
        check_batch(f, nqt, "volume integrand");
      }
      for (std::size_t e = 0; e < n; ++e) {
        if (facets && g.bary[e * nq][b] == 0.0) {
          bool on = false;
          for (std::size_t q = 0; q < nq; ++q) on = on || g.bary[e * nq + q][b] != 0.0;
          if (!on) continue;
        }
        double s = 0.0;
        for (std::size_t q = 0; q < nq; ++q) s += g.w[e * nq + q] * f[e * nq + q];
        r[(e * nloc + b) * np + i] = s;
      }
    }
  }
}

Index cell_element(const Layout& L, std::span<const Index> cells, std::size_t e, bool facets) {
  return facets ? L.facet_elem[cells[e]] : cells[e];
}

void gather(const Context& c, std::span<const Index> cells, bool facets, const RealTable& A, std::vector<double>& out) {
  const int nloc = c.L.nloc, np = c.L.npde;
  out.resize(cells.size() * nloc * np);
  for (std::size_t e = 0; e < cells.size(); ++e) {
    const Index k = cell_element(c.L, cells, e, facets);
    for (int a = 0; a < nloc; ++a)
      for (int j = 0; j < np; ++j) out[(e * nloc + a) * np + j] = A(c.m.tri(k, a), j);
  }
}

struct CellBatch {
  std::vector<Index> cells;
  bool facets = false;
};

/// Element batches followed by batches of Neumann facets (any component).
std::vector<CellBatch> make_batches(const Context& c, bool with_facets) {
  std::vector<CellBatch> out;
  const std::size_t ne = c.m.num_elements();
  for (std::size_t b = 0; b < ne; b += kChunk) {
    CellBatch cb;
    for (std::size_t k = b; k < std::min(ne, b + kChunk); ++k) cb.cells.push_back(static_cast<Index>(k));
    out.push_back(std::move(cb));
  }
  if (!with_facets || !c.pde.boundary_int) return out;
  std::vector<char> any(c.m.num_boundary_facets(), 0);
  for (const auto& list : c.L.neumann)
    for (Index f : list) any[f] = 1;
  std::vector<Index> fs;
  for (std::size_t f = 0; f < any.size(); ++f)
    if (any[f]) fs.push_back(static_cast<Index>(f));
  for (std::size_t b = 0; b < fs.size(); b += kChunk) {
    CellBatch cb;
    cb.facets = true;
    cb.cells.assign(fs.begin() + b, fs.begin() + std::min(fs.size(), b + kChunk));
    out.push_back(std::move(cb));
  }
  return out;
}

/// Zeroes facet contributions for components that are not Neumann there.
void mask_facets(const Context& c, std::span<const Index> cells, double* r) {
  const int nloc = c.L.nloc, np = c.L.npde;
  for (std::size_t e = 0; e < cells.size(); ++e)
    for (int i = 0; i < np; ++i)
      if (c.pde.bftype(cells[e], i) != 0)
        for (int b = 0; b < nloc; ++b) r[(e * nloc + b) * np + i] = 0.0;
}

std::vector<double> dirichlet_values(const Context& c, const RealTable& U, int i,
                                     const std::vector<Index>& verts) {
  const int d = c.L.d, np = c.L.npde;
  RealTable u(verts.size(), np), x(verts.size(), d);
  std::vector<int> marks(verts.size());
  for (std::size_t k = 0; k < verts.size(); ++k) {
    for (int j = 0; j < np; ++j) u(k, j) = U(verts[k], j);
    for (int j = 0; j < d; ++j) x(k, j) = c.X(verts[k], j);
    marks[k] = c.L.dir_mark[verts[k] * np + i];
  }
  auto r = c.pde.dirichlet_res(DirichletArgs{u, x, c.t, i, marks});
  check_batch(r, verts.size(), "Dirichlet residual");
  return r;
}

Vector residual_impl(const Context& c, const RealTable& U, const RealTable& Ud) {
  const Layout& L = c.L;
  const int nloc = L.nloc, np = L.npde;
  const auto batches = make_batches(c, true);
  std::vector<std::vector<double>> local(batches.size());
  parallel_for(
      batches.size(),
      [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
          const auto& cb = batches[b];
          const CellGeom g = make_geom(c, cb.cells, cb.facets);
          std::vector<double> ul, udl;
          gather(c, cb.cells, cb.facets, U, ul);
          if (!cb.facets) gather(c, cb.cells, false, Ud, udl);
          local[b].resize(ul.size());
          eval_cells(c, cb.cells, cb.facets, g, ul.data(), cb.facets ? nullptr : udl.data(), local[b].data());
          if (cb.facets) mask_facets(c, cb.cells, local[b].data());
        }
      },
      1);
  Vector r = Vector::Zero(static_cast<Eigen::Index>(L.nv * np));
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto& cb = batches[b];
    for (std::size_t e = 0; e < cb.cells.size(); ++e) {
      const Index k = cell_element(L, cb.cells, e, cb.facets);
      for (int a = 0; a < nloc; ++a)
        for (int i = 0; i < np; ++i) r[c.m.tri(k, a) * np + i] += local[b][(e * nloc + a) * np + i];
    }
  }
  for (int i = 0; i < np; ++i) {
    if (L.dir_vertices[i].empty()) continue;
    const auto rv = dirichlet_values(c, U, i, L.dir_vertices[i]);
    for (std::size_t k = 0; k < rv.size(); ++k) r[L.dir_vertices[i][k] * np + i] = rv[k];
  }
  if (!r.allFinite()) throw Error(ErrorCode::NonFinite, "fem: residual is not finite");
  return r;
}

using Triplets = std::vector<Eigen::Triplet<double>>;

void jacobian_impl(const Context& c, const RealTable& U, const RealTable& Ud, SparseMatrix& jy, SparseMatrix& jyp) {
  const Layout& L = c.L;
  const int nloc = L.nloc, np = L.npde, nd = nloc * np;
  const auto batches = make_batches(c, true);
  // local Jacobians per cell: [cell][row][col], rows and cols (a, comp)
  std::vector<std::vector<double>> ly(batches.size()), lyp(batches.size());
  parallel_for(
      batches.size(),
      [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
          const auto& cb = batches[b];
          const std::size_t n = cb.cells.size();
          const CellGeom g = make_geom(c, cb.cells, cb.facets);
          std::vector<double> ul, udl, r0(n * nd), r1(n * nd), pert(n);
          gather(c, cb.cells, cb.facets, U, ul);
          if (!cb.facets) gather(c, cb.cells, false, Ud, udl);
          const double* udp = cb.facets ? nullptr : udl.data();
          eval_cells(c, cb.cells, cb.facets, g, ul.data(), udp, r0.data());
          ly[b].assign(n * nd * nd, 0.0);
          if (!cb.facets) lyp[b].assign(n * nd * nd, 0.0);
          for (int wrt = 0; wrt < (cb.facets ? 1 : 2); ++wrt) {
            std::vector<double>& vals = wrt == 0 ? ul : udl;
            std::vector<double>& out = wrt == 0 ? ly[b] : lyp[b];
            for (int col = 0; col < nd; ++col) {
              for (std::size_t e = 0; e < n; ++e) {
                double& z = vals[e * nd + col];
                pert[e] = kFdStep * std::max(1.0, std::abs(z));
                const double zn = z + pert[e];
                pert[e] = zn - z;
                z = zn;
              }
              eval_cells(c, cb.cells, cb.facets, g, ul.data(), udp, r1.data());
              for (std::size_t e = 0; e < n; ++e) {
                vals[e * nd + col] -= pert[e];
                for (int row = 0; row < nd; ++row)
                  out[(e * nd + row) * nd + col] = (r1[e * nd + row] - r0[e * nd + row]) / pert[e];
              }
            }
          }
          if (cb.facets) {
            // rows of non-Neumann components carry no facet term
            for (std::size_t e = 0; e < n; ++e)
              for (int i = 0; i < np; ++i)
                if (c.pde.bftype(cb.cells[e], i) != 0)
                  for (int a = 0; a < nloc; ++a)
                    for (int col = 0; col < nd; ++col) ly[b][(e * nd + a * np + i) * nd + col] = 0.0;
          }
        }
      },
      1);
  Triplets ty, typ;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto& cb = batches[b];
    for (std::size_t e = 0; e < cb.cells.size(); ++e) {
      const Index k = cell_element(L, cb.cells, e, cb.facets);
      for (int row = 0; row < nd; ++row) {
        const Index gr = c.m.tri(k, row / np) * np + row % np;
        if (L.dirichlet[gr]) continue;
        for (int col = 0; col < nd; ++col) {
          const Index gc = c.m.tri(k, col / np) * np + col % np;
          const double vy = ly[b][(e * nd + row) * nd + col];
          if (vy != 0.0) ty.emplace_back(gr, gc, vy);
          if (!cb.facets) {
            const double vp = lyp[b][(e * nd + row) * nd + col];
            if (vp != 0.0) typ.emplace_back(gr, gc, vp);
          }
        }
      }
    }
  }
  RealTable Up = U;
  for (int i = 0; i < np; ++i) {
    const auto& verts = L.dir_vertices[i];
    if (verts.empty()) continue;
    const auto r0 = dirichlet_values(c, U, i, verts);
    for (int j = 0; j < np; ++j) {
      std::vector<double> h(verts.size());
      for (std::size_t k = 0; k < verts.size(); ++k) {
        const double z = U(verts[k], j);
        const double zn = z + kFdStep * std::max(1.0, std::abs(z));
        h[k] = zn - z;
        Up(verts[k], j) = zn;
      }
      const auto r1 = dirichlet_values(c, Up, i, verts);
      for (std::size_t k = 0; k < verts.size(); ++k) {
        Up(verts[k], j) = U(verts[k], j);
        const double v = (r1[k] - r0[k]) / h[k];
        if (v != 0.0 || i == j) ty.emplace_back(verts[k] * np + i, verts[k] * np + j, v);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(L.nv * np);
  jy.resize(n, n);
  jy.setFromTriplets(ty.begin(), ty.end());
  jyp.resize(n, n);
  jyp.setFromTriplets(typ.begin(), typ.end());
}

void require_sizes(const Mesh& m, const PdeDefinition& pde, const RealTable& U, const char* who) {
  pde.validate(m);
  require(U.rows() == m.num_vertices() && U.cols() == static_cast<std::size_t>(pde.npde),
          std::string(who) + ": U must be N_v x npde");
}

RealTable to_table(const Vector& y, std::size_t rows, int cols) {
  return RealTable(rows, cols, std::vector<double>(y.data(), y.data() + y.size()));
}

Vector to_vector(const RealTable& U) {
  return Eigen::Map<const Vector>(U.data().data(), static_cast<Eigen::Index>(U.size()));
}

/// The semi-discrete system on the linearly moving mesh of one step.
class MovingSystem {
 public:
  MovingSystem(const Mesh& m, const RealTable& Xdot, const PdeDefinition& pde, double t0)
      : m_(m), Xdot_(Xdot), pde_(pde), t0_(t0), L_(m, pde) {}

  ImplicitSystem system() const {
    ImplicitSystem s;
    s.size = m_.num_vertices() * pde_.npde;
    s.residual = [this](double t, const Vector& y, const Vector& yp, Vector& res) {
      const RealTable X = position(t);
      const Context c{L_, m_, X, Xdot_, pde_, t};
      res = residual_impl(c, table(y), table(yp));
    };
    s.jacobian = [this](double t, const Vector& y, const Vector& yp, SparseMatrix& jy, SparseMatrix& jyp) {
      const RealTable X = position(t);
      const Context c{L_, m_, X, Xdot_, pde_, t};
      jacobian_impl(c, table(y), table(yp), jy, jyp);
    };
    return s;
  }

  const Layout& layout() const { return L_; }

 private:
  RealTable position(double t) const {
    RealTable X = m_.X;
    const double s = t - t0_;
    for (std::size_t k = 0; k < X.size(); ++k) X.data()[k] += s * Xdot_.data()[k];
    return X;
  }
  RealTable table(const Vector& y) const { return to_table(y, m_.num_vertices(), pde_.npde); }

  const Mesh& m_;
  const RealTable& Xdot_;
  const PdeDefinition& pde_;
  double t0_;
  Layout L_;
};

class LinearSolver {
 public:
  LinearSolver(const SparseMatrix& A, bool direct) : direct_(direct) {
    if (direct) {
      lu_.analyzePattern(A);
      lu_.factorize(A);
      ok_ = lu_.info() == Eigen::Success;
    } else {
      it_.preconditioner().setDroptol(1e-6);
      it_.preconditioner().setFillfactor(20);
      it_.setTolerance(1e-12);
      it_.setMaxIterations(2000);
      it_.compute(A);
      ok_ = it_.info() == Eigen::Success;
    }
  }
  bool ok() const { return ok_; }
  Vector solve(const Vector& b) { return direct_ ? Vector(lu_.solve(b)) : Vector(it_.solve(b)); }

 private:
  bool direct_;
  bool ok_ = false;
  Eigen::SparseLU<SparseMatrix> lu_;
  Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> it_;
};

}  // namespace

Vector assemble_residual(const RealTable& U, const RealTable& Udot, const Mesh& m, const RealTable& Xdot,
                         const PdeDefinition& pde, double t) {
  require_sizes(m, pde, U, "assemble_residual");
  require(Udot.rows() == U.rows() && Udot.cols() == U.cols(), "assemble_residual: Udot must match U");
  require(Xdot.rows() == m.num_vertices() && Xdot.cols() == static_cast<std::size_t>(m.dim),
          "assemble_residual: Xdot must be N_v x d");
  const Layout L(m, pde);
  const Context c{L, m, m.X, Xdot, pde, t};
  return residual_impl(c, U, Udot);
}

void assemble_jacobian(const RealTable& U, const RealTable& Udot, const Mesh& m, const RealTable& Xdot,
                       const PdeDefinition& pde, double t, SparseMatrix& jy, SparseMatrix& jyp) {
  require_sizes(m, pde, U, "assemble_jacobian");
  require(Udot.rows() == U.rows() && Udot.cols() == U.cols(), "assemble_jacobian: Udot must match U");
  require(Xdot.rows() == m.num_vertices() && Xdot.cols() == static_cast<std::size_t>(m.dim),
          "assemble_jacobian: Xdot must be N_v x d");
  const Layout L(m, pde);
  const Context c{L, m, m.X, Xdot, pde, t};
  jacobian_impl(c, U, Udot, jy, jyp);
}

RealTable project_dirichlet(const RealTable& U, const Mesh& m, const PdeDefinition& pde, double t) {
  require_sizes(m, pde, U, "project_dirichlet");
  const Layout L(m, pde);
  const RealTable zero(m.num_vertices(), m.dim);
  const Context c{L, m, m.X, zero, pde, t};
  RealTable out = U;
  for (int i = 0; i < pde.npde; ++i) {
    const auto& verts = L.dir_vertices[i];
    if (verts.empty()) continue;
    for (int it = 0; it < 50; ++it) {
      const auto r0 = dirichlet_values(c, out, i, verts);
      double rmax = 0.0;
      for (double r : r0) rmax = std::max(rmax, std::abs(r));
      if (rmax == 0.0) break;
      RealTable up = out;
      std::vector<double> h(verts.size());
      for (std::size_t k = 0; k < verts.size(); ++k) {
        const double z = out(verts[k], i);
        up(verts[k], i) = z + kFdStep * std::max(1.0, std::abs(z));
        h[k] = up(verts[k], i) - z;
      }
      const auto r1 = dirichlet_values(c, up, i, verts);
      double dmax = 0.0;
      for (std::size_t k = 0; k < verts.size(); ++k) {
        const double dr = (r1[k] - r0[k]) / h[k];
        if (dr == 0.0) continue;
        const double delta = r0[k] / dr;
        out(verts[k], i) -= delta;
        dmax = std::max(dmax, std::abs(delta) / (1.0 + std::abs(out(verts[k], i))));
      }
      if (dmax <= 1e-15) break;
    }
  }
  return out;
}

StepResult movfem_step(double t, double dt, const RealTable& U, const Mesh& m, const RealTable& Xdot,
                       const PdeDefinition& pde, const FemStepOptions& opt, StepHistory* history) {
  require_sizes(m, pde, U, "movfem_step");
  require(dt > 0.0 && std::isfinite(dt), "movfem_step: dt must be positive");
  require(opt.reltol > 0.0 && opt.abstol > 0.0, "movfem_step: tolerances must be positive");
  require(Xdot.rows() == m.num_vertices() && Xdot.cols() == static_cast<std::size_t>(m.dim),
          "movfem_step: Xdot must be N_v x d");
  require(opt.control_weights.empty() || opt.control_weights.size() == U.size(),
          "movfem_step: control weights need N_v*npde entries");
  for (double w : opt.control_weights) require(w >= 0.0, "movfem_step: control weights must be nonnegative");

  const MovingSystem ms(m, Xdot, pde, t);
  const ImplicitSystem sys = ms.system();
  const Vector y = to_vector(project_dirichlet(U, m, pde, t));
  const auto n = y.size();
  Vector yp = history && history->yp.size() == n ? history->yp : Vector::Zero(n);
  RadauOptions ro;
  ro.abstol = opt.abstol;
  ro.reltol = opt.reltol;
  ro.direct_ls = opt.direct_ls;

  double h = dt;
  for (int attempt = 0; attempt < 60; ++attempt) {
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw Error(ErrorCode::StepUnderflow, "movfem_step: step size underflow at t = " + std::to_string(t));
    const RadauStep st = radau_step(sys, t, y, yp, h, ro);
    if (!st.converged) {
      if (opt.fixed_step)
        throw Error(ErrorCode::ConvergenceFailure, "movfem_step: Newton iteration failed with a fixed step");
      h *= 0.25;
      continue;
    }
    const Vector& ynew = st.Y[2];
    if (!ynew.allFinite()) throw Error(ErrorCode::NonFinite, "movfem_step: solution is not finite");
    double dt_next = dt;
    if (!opt.fixed_step) {
      const Vector err = two_step_error(history ? history->prev : std::nullopt, y, st, h);
      const double en = error_norm(err, y, ynew, opt.abstol, opt.reltol, opt.control_weights);
      if (!(en <= 1.0)) {
        h *= std::isfinite(en) ? step_factor(en) : 0.25;
        continue;
      }
      dt_next = h * step_factor(en);
    }
    if (history) {
      history->prev = PrevStep{y, h};
      history->yp = st.Yp[2];
    }
    return {to_table(ynew, m.num_vertices(), pde.npde), h, dt_next};
  }
  throw Error(ErrorCode::ConvergenceFailure, "movfem_step: no acceptable step after repeated reductions");
}

BvpResult movfem_bvp(const RealTable& U0, const Mesh& m, const PdeDefinition& pde, const BvpOptions& opt) {
  require_sizes(m, pde, U0, "movfem_bvp");
  require(opt.max_iter >= 1 && opt.tol > 0.0, "movfem_bvp: invalid iteration controls");
  const Layout L(m, pde);
  const RealTable zero(m.num_vertices(), m.dim);
  const Context c{L, m, m.X, zero, pde, 0.0};
  const RealTable zu(U0.rows(), U0.cols());
  BvpResult out;
  out.U = U0;
  Vector r = residual_impl(c, out.U, zu);
  for (int it = 0;; ++it) {
    out.residual = r.lpNorm<Eigen::Infinity>();
    out.iterations = it;
    if (out.residual <= opt.tol) return out;
    if (it == opt.max_iter)
      throw Error(ErrorCode::ConvergenceFailure, "movfem_bvp: no convergence after " + std::to_string(it) +
                                                     " iterations, residual " + std::to_string(out.residual));
    SparseMatrix jy, jyp;
    jacobian_impl(c, out.U, zu, jy, jyp);
    jy.makeCompressed();
    LinearSolver ls(jy, opt.direct_ls);
    if (!ls.ok()) throw Error(ErrorCode::SingularMatrix, "movfem_bvp: Jacobian factorization failed");
    const Vector delta = ls.solve(-r);
    if (!delta.allFinite()) throw Error(ErrorCode::NonFinite, "movfem_bvp: Newton update is not finite");
    const double r2 = r.squaredNorm();
    double lambda = 1.0;
    RealTable trial = out.U;
    Vector rt;
    for (;;) {
      for (std::size_t k = 0; k < trial.size(); ++k) trial.data()[k] = out.U.data()[k] + lambda * delta[k];
      rt = residual_impl(c, trial, zu);
      if (rt.squaredNorm() <= (1.0 - 1e-4 * lambda) * r2 || lambda < 1e-4) break;
      lambda *= 0.5;
    }
    out.U = trial;
    r = rt;
  }
}

namespace {

template <class Fn>
void error_points(const ExactFn& uexact, double t, const Mesh& m, const RealTable& U, Fn&& fn) {
  require(U.rows() == m.num_vertices(), "error norm: U must have one row per vertex");
  const int d = m.dim;
  const QuadRule rule = simplex_rule(d, 4);
  const std::size_t ne = m.num_elements(), nq = rule.size();
  RealTable x(ne * nq, d), uh(ne * nq, U.cols());
  std::vector<double> w(ne * nq);
  const auto vol = element_volumes(m);
  for (std::size_t k = 0; k < ne; ++k)
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t p = k * nq + q;
      w[p] = rule.weights[q] * vol[k];
      for (int a = 0; a <= d; ++a) {
        const Index v = m.tri(k, a);
        const double b = rule.bary[q][a];
        for (int i = 0; i < d; ++i) x(p, i) += b * m.X(v, i);
        for (std::size_t c = 0; c < U.cols(); ++c) uh(p, c) += b * U(v, c);
      }
    }
  const RealTable ue = uexact(t, x);
  if (ue.rows() != x.rows() || ue.cols() != U.cols())
    throw Error(ErrorCode::BadCallbackShape, "error norm: exact solution has the wrong shape");
  fn(ue, uh, w);
}

}  // namespace

double error_p1_l2(const ExactFn& uexact, double t, const Mesh& m, const RealTable& U) {
  double s = 0.0;
  error_points(uexact, t, m, U, [&](const RealTable& ue, const RealTable& uh, const std::vector<double>& w) {
    for (std::size_t p = 0; p < w.size(); ++p)
      for (std::size_t c = 0; c < ue.cols(); ++c) s += w[p] * (ue(p, c) - uh(p, c)) * (ue(p, c) - uh(p, c));
  });
  return std::sqrt(s);
}

double error_p1_linf(const ExactFn& uexact, double t, const Mesh& m, const RealTable& U) {
  double e = 0.0;
  error_points(uexact, t, m, U, [&](const RealTable& ue, const RealTable& uh, const std::vector<double>&) {
    for (std::size_t k = 0; k < ue.size(); ++k) e = std::max(e, std::abs(ue.data()[k] - uh.data()[k]));
  });
  const RealTable uv = uexact(t, m.X);
  if (uv.rows() != U.rows() || uv.cols() != U.cols())
    throw Error(ErrorCode::BadCallbackShape, "error norm: exact solution has the wrong shape");
  for (std::size_t k = 0; k < uv.size(); ++k) e = std::max(e, std::abs(uv.data()[k] - U.data()[k]));
  return e;
}

}  // namespace mmpde
