// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmpde/error.hpp"

namespace mmpde {

namespace {

constexpr double kPi = std::numbers::pi;

/// Facet midpoint coordinate i.
double facet_mid(const Mesh& m, std::size_t f, int i) {
  double s = 0.0;
  for (int j = 0; j < m.dim; ++j) s += m.X(m.tri_bf(f, j), i);
  return s / m.dim;
}

double dot_grad(const RealTable& du, const RealTable& dv, std::size_t p, int comp, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += du(p, comp * d + k) * dv(p, k);
  return s;
}

ExactFn pointwise(int npde, std::function<double(double t, std::span<const double> x)> f) {
  return [npde, f](double t, const RealTable& x) {
    RealTable u(x.rows(), npde);
    for (std::size_t p = 0; p < x.rows(); ++p) u(p, 0) = f(t, x.row(p));
    return u;
  };
}

IndexTable types_from_marks(const std::vector<int>& marks, int npde, const std::function<int(int mark, int comp)>& fn) {
  IndexTable t(marks.size(), npde);
  for (std::size_t f = 0; f < marks.size(); ++f)
    for (int c = 0; c < npde; ++c) t(f, c) = fn(marks[f], c);
  return t;
}

}  // namespace

double burgers_exact(double t, double x, double eps) {
  const double a1 = (-x + 0.5 - 4.95 * t) / (20.0 * eps);
  const double a2 = (-x + 0.5 - 0.75 * t) / (4.0 * eps);
  const double a3 = (-x + 0.375) / (2.0 * eps);
  const double mx = std::max({a1, a2, a3});
  const double e1 = std::exp(a1 - mx), e2 = std::exp(a2 - mx), e3 = std::exp(a3 - mx);
  return (0.1 * e1 + 0.5 * e2 + e3) / (e1 + e2 + e3);
}

double heat_exact(double t, double x, double y) { return std::exp(-t) * std::sin(2 * kPi * x) * std::sin(3 * kPi * y); }

double poisson_exact(double x, double y, double z) {
  return std::sin(2 * kPi * x) * std::sin(3 * kPi * y) * std::sin(kPi * z);
}

double combustion_rate(double theta, double Y, double le, double alpha, double beta) {
  return beta * beta / (2.0 * le) * Y * std::exp(-beta * (1.0 - theta) / (1.0 - alpha * (1.0 - theta)));
}

BenchmarkProblem burgers1d() {
  const double eps = 1e-3;
  BenchmarkProblem p;
  p.name = "burgers1d";
  p.dim = 1;
  p.npde = 1;
  p.t_end = 1.0;
  p.default_n = 60;
  p.params = {{"eps", eps}};
  p.make_mesh = [](int n) {
    const auto x = linspace(0.0, 1.0, n);
    return line_mesh(x);
  };
  p.uexact = pointwise(1, [eps](double t, std::span<const double> x) { return burgers_exact(t, x[0], eps); });
  p.initial = [eps](const RealTable& X) {
    RealTable u(X.rows(), 1);
    for (std::size_t v = 0; v < X.rows(); ++v) u(v, 0) = burgers_exact(0.0, X(v, 0), eps);
    return u;
  };
  p.make_pde = [eps](const Mesh& m) {
    PdeDefinition pde;
    pde.npde = 1;
    pde.bf_mark.assign(m.num_boundary_facets(), 1);
    pde.bftype = IndexTable(m.num_boundary_facets(), 1, 1);
    pde.volume_int = [eps](const VolumeArgs& a) {
      std::vector<double> f(a.u.rows());
      for (std::size_t p = 0; p < f.size(); ++p)
        f[p] = a.ut(p, 0) * a.v[p] + eps * a.du(p, 0) * a.dv(p, 0) + a.u(p, 0) * a.du(p, 0) * a.v[p];
      return f;
    };
    pde.boundary_int = [](const BoundaryArgs& a) { return std::vector<double>(a.u.rows(), 0.0); };
    pde.dirichlet_res = [eps](const DirichletArgs& a) {
      std::vector<double> r(a.u.rows());
      for (std::size_t p = 0; p < r.size(); ++p) r[p] = a.u(p, 0) - burgers_exact(a.t, a.x(p, 0), eps);
      return r;
    };
    return pde;
  };
  return p;
}

BenchmarkProblem heat2d() {
  BenchmarkProblem p;
  p.name = "heat2d";
  p.dim = 2;
  p.npde = 1;
  p.t_end = 1.0;
  p.default_n = 20;
  p.make_mesh = [](int n) {
    const auto x = linspace(0.0, 1.0, n);
    return rect2tri(x, x, 2);
  };
  p.uexact = pointwise(1, [](double t, std::span<const double> x) { return heat_exact(t, x[0], x[1]); });
  p.initial = [](const RealTable& X) {
    RealTable u(X.rows(), 1);
    for (std::size_t v = 0; v < X.rows(); ++v) u(v, 0) = heat_exact(0.0, X(v, 0), X(v, 1));
    return u;
  };
  p.make_pde = [](const Mesh& m) {
    PdeDefinition pde;
    pde.npde = 1;
    pde.bf_mark.assign(m.num_boundary_facets(), 1);
    for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) {
      const double x = facet_mid(m, f, 0), y = facet_mid(m, f, 1);
      if (x < 1e-8) pde.bf_mark[f] = 4;
      if (x > 1 - 1e-8) pde.bf_mark[f] = 2;
      if (y > 1 - 1e-8) pde.bf_mark[f] = 3;
    }
    pde.bftype = types_from_marks(pde.bf_mark, 1, [](int mk, int) { return mk == 2 || mk == 3 ? 0 : 1; });
    pde.volume_int = [](const VolumeArgs& a) {
      std::vector<double> f(a.u.rows());
      const double c = 13 * kPi * kPi - 1;
      for (std::size_t p = 0; p < f.size(); ++p)
        f[p] = a.ut(p, 0) * a.v[p] + dot_grad(a.du, a.dv, p, 0, 2) - c * heat_exact(a.t, a.x(p, 0), a.x(p, 1)) * a.v[p];
      return f;
    };
    pde.boundary_int = [](const BoundaryArgs& a) {
      std::vector<double> g(a.u.rows(), 0.0);
      for (std::size_t p = 0; p < g.size(); ++p) {
        if (a.mark[p] == 2) g[p] = -2 * kPi * std::exp(-a.t) * std::sin(3 * kPi * a.x(p, 1)) * a.v[p];
        if (a.mark[p] == 3) g[p] = 3 * kPi * std::exp(-a.t) * std::sin(2 * kPi * a.x(p, 0)) * a.v[p];
      }
      return g;
    };
    pde.dirichlet_res = [](const DirichletArgs& a) {
      std::vector<double> r(a.u.rows(), 0.0);
      for (std::size_t p = 0; p < r.size(); ++p)
        if (a.mark[p] == 1 || a.mark[p] == 4) r[p] = a.u(p, 0);
      return r;
    };
    return pde;
  };
  return p;
}

Mesh combustion_mesh(int n) {
  require(n >= 1, "combustion_mesh: n must be at least 1");
  const auto block = [n](double x0, double x1, double y0, double y1) {
    const auto x = linspace(x0, x1, static_cast<std::size_t>(std::lround((x1 - x0) * n)));
    const auto y = linspace(y0, y1, static_cast<std::size_t>(std::lround((y1 - y0) * n)));
    return rect2tri(x, y, 2);
  };
  return mesh_merge(mesh_merge(block(0, 15, 0, 16), block(15, 30, 4, 12)), block(30, 60, 0, 16));
}

BenchmarkProblem combustion2d() {
  const double le = 1.0, alpha = 0.8, beta = 10.0, k = 0.1;
  BenchmarkProblem p;
  p.name = "combustion2d";
  p.dim = 2;
  p.npde = 2;
  p.t_end = 60.0;
  p.default_n = 1;
  p.params = {{"Le", le}, {"alpha", alpha}, {"beta", beta}, {"k", k}};
  p.make_mesh = combustion_mesh;
  p.initial = [le](const RealTable& X) {
    RealTable u(X.rows(), 2);
    for (std::size_t v = 0; v < X.rows(); ++v) {
      const double x = X(v, 0);
      if (x <= 7.5) {
        u(v, 0) = 1.0;
        u(v, 1) = 0.0;
      } else {
        u(v, 0) = std::exp(7.5 - x);
        u(v, 1) = 1.0 - std::exp(le * (7.5 - x));
      }
    }
    return u;
  };
  p.make_pde = [le, alpha, beta, k](const Mesh& m) {
    PdeDefinition pde;
    pde.npde = 2;
    pde.bf_mark.assign(m.num_boundary_facets(), 1);
    for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) {
      const double x = facet_mid(m, f, 0), y = facet_mid(m, f, 1);
      int& mk = pde.bf_mark[f];
      if (x < 1e-8) mk = 2;
      if (std::abs(x - 15) < 1e-8 || std::abs(x - 30) < 1e-8) mk = 3;
      if ((std::abs(y - 4) < 1e-8 || std::abs(y - 12) < 1e-8) && x > 15 && x < 30) mk = 3;
    }
    pde.bftype = types_from_marks(pde.bf_mark, 2, [](int mk, int) { return mk == 2 ? 1 : 0; });
    pde.volume_int = [le, alpha, beta](const VolumeArgs& a) {
      std::vector<double> f(a.u.rows());
      for (std::size_t p = 0; p < f.size(); ++p) {
        const double w = combustion_rate(a.u(p, 0), a.u(p, 1), le, alpha, beta);
        if (a.i == 0)
          f[p] = a.ut(p, 0) * a.v[p] + dot_grad(a.du, a.dv, p, 0, 2) - w * a.v[p];
        else
          f[p] = a.ut(p, 1) * a.v[p] + dot_grad(a.du, a.dv, p, 1, 2) / le + w * a.v[p];
      }
      return f;
    };
    pde.boundary_int = [k](const BoundaryArgs& a) {
      std::vector<double> g(a.u.rows(), 0.0);
      if (a.i == 0)
        for (std::size_t p = 0; p < g.size(); ++p)
          if (a.mark[p] == 3) g[p] = k * a.u(p, 0) * a.v[p];
      return g;
    };
    pde.dirichlet_res = [](const DirichletArgs& a) {
      std::vector<double> r(a.u.rows(), 0.0);
      for (std::size_t p = 0; p < r.size(); ++p)
        if (a.mark[p] == 2) r[p] = a.i == 0 ? a.u(p, 0) - 1.0 : a.u(p, 1);
      return r;
    };
    return pde;
  };
  return p;
}

BenchmarkProblem poisson3d() {
  BenchmarkProblem p;
  p.name = "poisson3d";
  p.dim = 3;
  p.npde = 1;
  p.steady = true;
  p.t_end = 0.0;
  p.default_n = 8;
  p.make_mesh = [](int n) {
    const auto x = linspace(0.0, 1.0, n);
    return cube2tet(x, x, x);
  };
  p.uexact = pointwise(1, [](double, std::span<const double> x) { return poisson_exact(x[0], x[1], x[2]); });
  p.initial = [](const RealTable& X) { return RealTable(X.rows(), 1); };
  p.make_pde = [](const Mesh& m) {
    PdeDefinition pde;
    pde.npde = 1;
    pde.bf_mark.assign(m.num_boundary_facets(), 1);
    for (std::size_t f = 0; f < m.num_boundary_facets(); ++f)
      if (facet_mid(m, f, 0) > 1 - 1e-8) pde.bf_mark[f] = 2;
    pde.bftype = types_from_marks(pde.bf_mark, 1, [](int mk, int) { return mk == 2 ? 0 : 1; });
    pde.volume_int = [](const VolumeArgs& a) {
      std::vector<double> f(a.u.rows());
      for (std::size_t p = 0; p < f.size(); ++p)
        f[p] = dot_grad(a.du, a.dv, p, 0, 3) -
               14 * kPi * kPi * poisson_exact(a.x(p, 0), a.x(p, 1), a.x(p, 2)) * a.v[p];
      return f;
    };
    pde.boundary_int = [](const BoundaryArgs& a) {
      std::vector<double> g(a.u.rows(), 0.0);
      for (std::size_t p = 0; p < g.size(); ++p)
        if (a.mark[p] == 2) g[p] = -2 * kPi * std::sin(3 * kPi * a.x(p, 1)) * std::sin(kPi * a.x(p, 2)) * a.v[p];
      return g;
    };
    pde.dirichlet_res = [](const DirichletArgs& a) {
      std::vector<double> r(a.u.rows());
      for (std::size_t p = 0; p < r.size(); ++p) r[p] = a.u(p, 0) - poisson_exact(a.x(p, 0), a.x(p, 1), a.x(p, 2));
      return r;
    };
    return pde;
  };
  return p;
}

std::vector<std::string> problem_names() { return {"burgers1d", "heat2d", "combustion2d", "poisson3d"}; }

BenchmarkProblem make_problem(const std::string& name) {
  if (name == "burgers1d") return burgers1d();
  if (name == "heat2d") return heat2d();
  if (name == "combustion2d") return combustion2d();
  if (name == "poisson3d") return poisson3d();
  throw Error(ErrorCode::InvalidArgument, "unknown problem '" + name + "'");
}

}  // namespace mmpde
