// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mmpde/error.hpp"
#include "mmpde/fem.hpp"

using namespace mmpde;

namespace {

constexpr double kPi = std::numbers::pi;

// Single-component weak form from a pointwise volume integrand and Dirichlet
// data g on every boundary facet (or Neumann flux on facets with marker 2).
PdeDefinition scalar_pde(const Mesh& m, std::function<double(const VolumeArgs&, std::size_t)> F,
                         std::function<double(double t, std::span<const double> x)> g,
                         std::function<double(const BoundaryArgs&, std::size_t)> G = {},
                         std::vector<int> marks = {}) {
  PdeDefinition pde;
  pde.npde = 1;
  pde.bf_mark = marks.empty() ? std::vector<int>(m.num_boundary_facets(), 1) : std::move(marks);
  pde.bftype = IndexTable(m.num_boundary_facets(), 1, 1);
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) pde.bftype(f, 0) = pde.bf_mark[f] == 2 ? 0 : 1;
  pde.volume_int = [F](const VolumeArgs& a) {
    std::vector<double> r(a.u.rows());
    for (std::size_t p = 0; p < r.size(); ++p) r[p] = F(a, p);
    return r;
  };
  pde.boundary_int = [G](const BoundaryArgs& a) {
    std::vector<double> r(a.u.rows(), 0.0);
    if (G)
      for (std::size_t p = 0; p < r.size(); ++p) r[p] = G(a, p);
    return r;
  };
  pde.dirichlet_res = [g](const DirichletArgs& a) {
    std::vector<double> r(a.u.rows());
    for (std::size_t p = 0; p < r.size(); ++p) r[p] = a.u(p, 0) - g(a.t, a.x.row(p));
    return r;
  };
  return pde;
}

double laplace(const VolumeArgs& a, std::size_t p) {
  double s = 0;
  for (std::size_t k = 0; k < a.dv.cols(); ++k) s += a.du(p, k) * a.dv(p, k);
  return s;
}

RealTable sample(const Mesh& m, const std::function<double(std::span<const double>)>& f) {
  RealTable u(m.num_vertices(), 1);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) u(v, 0) = f(m.X.row(v));
  return u;
}

bool on_boundary(const Mesh& m, std::size_t v) {
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f)
    for (std::size_t j = 0; j < m.tri_bf.cols(); ++j)
      if (m.tri_bf(f, j) == static_cast<Index>(v)) return true;
  return false;
}

ExactFn exact1(std::function<double(double, std::span<const double>)> f) {
  return [f](double t, const RealTable& x) {
    RealTable u(x.rows(), 1);
    for (std::size_t p = 0; p < x.rows(); ++p) u(p, 0) = f(t, x.row(p));
    return u;
  };
}

}  // namespace

TEST_CASE("1D stiffness rows match the three-point stencil") {
  const std::vector<double> x = {0.0, 0.1, 0.3, 0.6, 1.0};
  const Mesh m = line_mesh(x);
  const auto pde = scalar_pde(m, laplace, [](double, auto) { return 0.0; });
  RealTable U(5, 1, std::vector<double>{0.3, -1.0, 2.0, 0.5, 1.5});
  const RealTable zero(5, 1, 0.0), Xdot(5, 1, 0.0);
  const Vector r = assemble_residual(U, zero, m, Xdot, pde, 0.0);
  for (int i = 1; i <= 3; ++i) {
    const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
    const double expect = (U(i, 0) - U(i - 1, 0)) / hl - (U(i + 1, 0) - U(i, 0)) / hr;
    CHECK(r[i] == doctest::Approx(expect).epsilon(1e-13));
  }
  CHECK(r[0] == doctest::Approx(0.3));
  CHECK(r[4] == doctest::Approx(1.5));
}

TEST_CASE("mass matrix row sums are the vertex patch volume shares") {
  const auto g = linspace(0, 1, 4);
  const Mesh m = rect2tri(g, g, 2);
  const auto pde = scalar_pde(m, [](const VolumeArgs& a, std::size_t p) { return a.ut(p, 0) * a.v[p]; },
                              [](double, auto) { return 0.0; });
  const std::size_t nv = m.num_vertices();
  const RealTable U(nv, 1, 0.0), Ud(nv, 1, 1.0), Xdot(nv, 2, 0.0);
  const Vector r = assemble_residual(U, Ud, m, Xdot, pde, 0.0);
  const auto vol = element_volumes(m);
  std::vector<double> share(nv, 0.0);
  for (std::size_t k = 0; k < m.num_elements(); ++k)
    for (int j = 0; j < 3; ++j) share[m.tri(k, j)] += vol[k] / 3.0;
  for (std::size_t v = 0; v < nv; ++v)
    if (!on_boundary(m, v)) CHECK(r[v] == doctest::Approx(share[v]).epsilon(1e-13));
}

TEST_CASE("ALE derivative vanishes for a steady affine field on a moving mesh") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> w(-1, 1);
  const auto g = linspace(0, 1, 5);
  const Mesh m = cube2tet(g, g, g);
  const std::size_t nv = m.num_vertices();
  const double a[3] = {0.7, -1.3, 2.1};
  RealTable U(nv, 1), Ud(nv, 1), Xdot(nv, 3);
  for (std::size_t v = 0; v < nv; ++v) {
    U(v, 0) = 0.5;
    Ud(v, 0) = 0;
    for (int i = 0; i < 3; ++i) {
      Xdot(v, i) = w(rng);
      U(v, 0) += a[i] * m.X(v, i);
      Ud(v, 0) += a[i] * Xdot(v, i);
    }
  }
  const auto pde = scalar_pde(m, [](const VolumeArgs& a, std::size_t p) { return a.ut(p, 0) * a.v[p]; },
                              [](double, auto) { return 0.0; }, {}, std::vector<int>(m.num_boundary_facets(), 2));
  const Vector r = assemble_residual(U, Ud, m, Xdot, pde, 0.0);
  CHECK(r.lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("analytic Jacobians agree with finite differences of the residual") {
  const auto g = linspace(0, 1, 4);
  const Mesh m = rect2tri(g, g, 1);
  const std::size_t nv = m.num_vertices();
  // two coupled components with a nonlinear reaction term
  PdeDefinition pde;
  pde.npde = 2;
  pde.bf_mark.assign(m.num_boundary_facets(), 1);
  pde.bftype = IndexTable(m.num_boundary_facets(), 2, 0);
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) pde.bftype(f, 0) = 1;
  pde.volume_int = [](const VolumeArgs& a) {
    std::vector<double> r(a.u.rows());
    for (std::size_t p = 0; p < r.size(); ++p) {
      const double u = a.u(p, 0), y = a.u(p, 1);
      const int c = a.i;
      const double diff = a.du(p, 2 * c) * a.dv(p, 0) + a.du(p, 2 * c + 1) * a.dv(p, 1);
      const double react = c == 0 ? u * u * y : std::sin(u) - u * a.du(p, 2);
      r[p] = a.ut(p, c) * a.v[p] + (1 + u * u) * diff + react * a.v[p];
    }
    return r;
  };
  pde.boundary_int = [](const BoundaryArgs& a) {
    std::vector<double> r(a.u.rows());
    for (std::size_t p = 0; p < r.size(); ++p) r[p] = a.u(p, 1) * a.u(p, 1) * a.v[p];
    return r;
  };
  pde.dirichlet_res = [](const DirichletArgs& a) {
    std::vector<double> r(a.u.rows());
    for (std::size_t p = 0; p < r.size(); ++p) r[p] = a.u(p, 0) * a.u(p, 0) * a.u(p, 0) - a.x(p, 0);
    return r;
  };
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> w(-1, 1);
  RealTable U(nv, 2), Ud(nv, 2), Xd(nv, 2);
  for (double& v : U.data()) v = w(rng);
  for (double& v : Ud.data()) v = w(rng);
  for (double& v : Xd.data()) v = 0.3 * w(rng);
  SparseMatrix jy, jyp;
  assemble_jacobian(U, Ud, m, Xd, pde, 0.2, jy, jyp);
  const Eigen::MatrixXd Jy(jy), Jyp(jyp);
  const double h = 1e-6;
  double ey = 0, eyp = 0, scale = 0;
  for (std::size_t j = 0; j < 2 * nv; ++j) {
    RealTable Up = U, Um = U, Udp = Ud, Udm = Ud;
    Up.data()[j] += h;
    Um.data()[j] -= h;
    Udp.data()[j] += h;
    Udm.data()[j] -= h;
    const Vector cy = (assemble_residual(Up, Ud, m, Xd, pde, 0.2) - assemble_residual(Um, Ud, m, Xd, pde, 0.2)) / (2 * h);
    const Vector cyp = (assemble_residual(U, Udp, m, Xd, pde, 0.2) - assemble_residual(U, Udm, m, Xd, pde, 0.2)) / (2 * h);
    ey = std::max(ey, (cy - Jy.col(j)).lpNorm<Eigen::Infinity>());
    eyp = std::max(eyp, (cyp - Jyp.col(j)).lpNorm<Eigen::Infinity>());
    scale = std::max(scale, cy.lpNorm<Eigen::Infinity>());
  }
  CHECK(ey / scale < 1e-5);
  CHECK(eyp / scale < 1e-5);
}

TEST_CASE("steady solve reproduces affine solutions with a Neumann flux") {
  // -u'' = 0, u(0) = 0, u'(1) = 2  ->  u = 2x
  const Mesh m = line_mesh(std::vector<double>{0, 0.15, 0.4, 0.45, 0.8, 1.0});
  std::vector<int> marks(m.num_boundary_facets(), 1);
  for (std::size_t f = 0; f < marks.size(); ++f)
    if (m.X(m.tri_bf(f, 0), 0) > 0.5) marks[f] = 2;
  const auto pde = scalar_pde(
      m, laplace, [](double, auto) { return 0.0; }, [](const BoundaryArgs& a, std::size_t p) { return -2.0 * a.v[p]; },
      marks);
  const BvpResult r = movfem_bvp(RealTable(m.num_vertices(), 1, 0.0), m, pde);
  CHECK(r.residual <= 1e-6);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) CHECK(r.U(v, 0) == doctest::Approx(2 * m.X(v, 0)).epsilon(1e-10));
}

TEST_CASE("steady 2D Poisson converges at second order in L2") {
  auto solve = [](int n) {
    const auto g = linspace(0, 1, n);
    const Mesh m = rect2tri(g, g, 2);
    auto ue = [](std::span<const double> x) { return std::sin(kPi * x[0]) * std::sin(2 * kPi * x[1]); };
    const auto pde = scalar_pde(
        m,
        [ue](const VolumeArgs& a, std::size_t p) { return laplace(a, p) - 5 * kPi * kPi * ue(a.x.row(p)) * a.v[p]; },
        [](double, auto) { return 0.0; });
    const BvpResult r = movfem_bvp(RealTable(m.num_vertices(), 1, 0.0), m, pde);
    return error_p1_l2(exact1([ue](double, std::span<const double> x) { return ue(x); }), 0, m, r.U);
  };
  const double e1 = solve(8), e2 = solve(16);
  CHECK(e1 / e2 > 3.4);
  CHECK(e1 / e2 < 4.6);
}

TEST_CASE("error norms of the interpolant of x^2") {
  const int n = 10;
  const double h = 1.0 / n;
  const Mesh m = line_mesh(linspace(0, 1, n));
  const RealTable U = sample(m, [](std::span<const double> x) { return x[0] * x[0]; });
  const auto ue = exact1([](double, std::span<const double> x) { return x[0] * x[0]; });
  // per cell the error is (x - a)(b - x), whose squared integral is h^5/30
  CHECK(error_p1_l2(ue, 0, m, U) == doctest::Approx(std::sqrt(n * std::pow(h, 5) / 30)).epsilon(1e-12));
  const double linf = error_p1_linf(ue, 0, m, U);
  CHECK(linf <= h * h / 4 + 1e-15);
  CHECK(linf > 0.9 * h * h / 4);
  const RealTable V = sample(m, [](std::span<const double> x) { return 3 - x[0]; });
  const auto ve = exact1([](double, std::span<const double> x) { return 3 - x[0]; });
  CHECK(error_p1_l2(ve, 0, m, V) < 1e-14);
  CHECK(error_p1_linf(ve, 0, m, V) < 1e-14);
}

TEST_CASE("time step of u_t = -u is accurate and adaptive") {
  const Mesh m = line_mesh(linspace(0, 1, 4));
  PdeDefinition pde = scalar_pde(m, [](const VolumeArgs& a, std::size_t p) { return (a.ut(p, 0) + a.u(p, 0)) * a.v[p]; },
                                 [](double, auto) { return 0.0; }, {}, std::vector<int>(2, 2));
  RealTable U(5, 1, 1.0);
  const RealTable Xdot(5, 1, 0.0);
  FemStepOptions opt;
  opt.reltol = 1e-8;
  opt.abstol = 1e-10;
  StepHistory hist;
  double t = 0, dt = 1e-3;
  int steps = 0;
  while (t < 1 - 1e-14) {
    dt = std::min(dt, 1 - t);
    const StepResult s = movfem_step(t, dt, U, m, Xdot, pde, opt, &hist);
    t += s.dt_used;
    U = s.Unew;
    dt = s.dt_next;
    ++steps;
  }
  for (double v : U.data()) CHECK(v == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
  CHECK(steps < 60);
}

TEST_CASE("moving mesh step keeps a steady linear profile") {
  // u_t = u_xx, u = x with Dirichlet data; interior nodes move
  const Mesh m = line_mesh(linspace(0, 1, 8));
  const auto pde = scalar_pde(m, [](const VolumeArgs& a, std::size_t p) { return a.ut(p, 0) * a.v[p] + laplace(a, p); },
                              [](double, std::span<const double> x) { return x[0]; });
  RealTable U = m.X, Xdot(m.num_vertices(), 1, 0.0);
  for (std::size_t v = 1; v + 1 < m.num_vertices(); ++v) Xdot(v, 0) = 0.05 * std::sin(3.0 * v);
  FemStepOptions opt;
  opt.fixed_step = true;
  opt.reltol = 1e-12;
  opt.abstol = 1e-12;
  const StepResult s = movfem_step(0, 0.1, U, m, Xdot, pde, opt);
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    CHECK(s.Unew(v, 0) == doctest::Approx(m.X(v, 0) + 0.1 * Xdot(v, 0)).epsilon(1e-10));
}

TEST_CASE("Dirichlet rows hold R and projection satisfies it") {
  const auto g = linspace(0, 1, 3);
  const Mesh m = rect2tri(g, g, 2);
  const auto pde = scalar_pde(m, laplace, [](double t, std::span<const double> x) { return t + x[0] * x[1]; });
  RealTable U(m.num_vertices(), 1, 0.25);
  const RealTable zero(m.num_vertices(), 1, 0.0), Xd(m.num_vertices(), 2, 0.0);
  const Vector r = assemble_residual(U, zero, m, Xd, pde, 0.5);
  const RealTable P = project_dirichlet(U, m, pde, 0.5);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (!on_boundary(m, v)) {
      CHECK(P(v, 0) == 0.25);
      continue;
    }
    CHECK(r[v] == doctest::Approx(0.25 - (0.5 + m.X(v, 0) * m.X(v, 1))));
    CHECK(P(v, 0) == doctest::Approx(0.5 + m.X(v, 0) * m.X(v, 1)).epsilon(1e-12));
  }
}

TEST_CASE("callbacks returning the wrong number of values are rejected") {
  const Mesh m = line_mesh(linspace(0, 1, 3));
  auto pde = scalar_pde(m, laplace, [](double, auto) { return 0.0; });
  pde.volume_int = [](const VolumeArgs& a) { return std::vector<double>(a.u.rows() + 1, 0.0); };
  const RealTable U(4, 1, 0.0), X(4, 1, 0.0);
  try {
    assemble_residual(U, U, m, X, pde, 0.0);
    FAIL("no exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadCallbackShape);
  }
  PdeDefinition bad = scalar_pde(m, laplace, [](double, auto) { return 0.0; });
  bad.bf_mark.pop_back();
  CHECK_THROWS_AS(bad.validate(m), Error);
}
