// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mmpde/error.hpp"
#include "mmpde/problems.hpp"

using namespace mmpde;

namespace {

constexpr double kPi = std::numbers::pi;

// Max over non-Dirichlet rows of |r_i| / |patch_i| with U the interpolant
// of the exact solution and Udot the interpolant of its time derivative.
double scaled_consistency(const BenchmarkProblem& p, int n, double t) {
  const Mesh m = p.make_mesh(n);
  const PdeDefinition pde = p.make_pde(m);
  const double h = 1e-6;
  const RealTable U = p.uexact(t, m.X);
  RealTable Ud = p.uexact(t + h, m.X);
  const RealTable Um = p.uexact(t - h, m.X);
  for (std::size_t i = 0; i < Ud.size(); ++i) Ud.data()[i] = (Ud.data()[i] - Um.data()[i]) / (2 * h);
  const RealTable Xdot(m.num_vertices(), m.dim, 0.0);
  const Vector r = assemble_residual(U, Ud, m, Xdot, pde, t);
  std::vector<double> patch(m.num_vertices(), 0.0);
  const auto vol = element_volumes(m);
  for (std::size_t k = 0; k < m.num_elements(); ++k)
    for (int j = 0; j <= m.dim; ++j) patch[m.tri(k, j)] += vol[k];
  std::vector<char> dirichlet(m.num_vertices(), 0);
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f)
    if (pde.bftype(f, 0) == 1)
      for (int j = 0; j < m.dim; ++j) dirichlet[m.tri_bf(f, j)] = 1;
  double worst = 0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (!dirichlet[v]) worst = std::max(worst, std::abs(r[v]) / patch[v]);
  return worst;
}

}  // namespace

TEST_CASE("Burgers exact solution satisfies the PDE") {
  const double eps = 1e-3, h = 1e-5;
  for (double t : {0.0, 0.3, 0.8})
    for (double x : {0.1, 0.37, 0.5, 0.62, 0.9}) {
      auto u = [&](double tt, double xx) { return burgers_exact(tt, xx, eps); };
      const double ut = (u(t + h, x) - u(t - h, x)) / (2 * h);
      const double ux = (u(t, x + h) - u(t, x - h)) / (2 * h);
      const double uxx = (u(t, x + h) - 2 * u(t, x) + u(t, x - h)) / (h * h);
      const double scale = std::abs(ut) + std::abs(u(t, x) * ux) + eps * std::abs(uxx);
      CHECK(std::abs(ut + u(t, x) * ux - eps * uxx) < 1e-3 * scale + 1e-6);
    }
  CHECK(burgers_exact(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(burgers_exact(0, 1) == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("heat and Poisson exact solutions satisfy their PDEs") {
  const double h = 1e-4;
  for (double x : {0.13, 0.5, 0.77})
    for (double y : {0.21, 0.66}) {
      const double t = 0.4;
      const double ut = (heat_exact(t + h, x, y) - heat_exact(t - h, x, y)) / (2 * h);
      const double lap = (heat_exact(t, x + h, y) + heat_exact(t, x - h, y) + heat_exact(t, x, y + h) +
                          heat_exact(t, x, y - h) - 4 * heat_exact(t, x, y)) / (h * h);
      CHECK(ut == doctest::Approx(lap + (13 * kPi * kPi - 1) * heat_exact(t, x, y)).epsilon(1e-5));
      const double z = 0.3;
      double lp = -6 * poisson_exact(x, y, z);
      lp += poisson_exact(x + h, y, z) + poisson_exact(x - h, y, z) + poisson_exact(x, y + h, z) +
            poisson_exact(x, y - h, z) + poisson_exact(x, y, z + h) + poisson_exact(x, y, z - h);
      CHECK(-lp / (h * h) == doctest::Approx(14 * kPi * kPi * poisson_exact(x, y, z)).epsilon(1e-5));
    }
}

TEST_CASE("weak forms are consistent with the exact solutions") {
  // The scaled residual stays bounded under refinement; a wrong flux sign
  // adds a term growing like 1/h.
  for (const char* name : {"heat2d", "poisson3d", "burgers1d"}) {
    CAPTURE(name);
    const BenchmarkProblem p = make_problem(name);
    const int n = name == std::string("poisson3d") ? 4 : name == std::string("burgers1d") ? 400 : 10;
    const double t = p.steady ? 0.0 : 0.3;
    const double r1 = scaled_consistency(p, n, t), r2 = scaled_consistency(p, 2 * n, t);
    CHECK(r2 < 1.5 * r1);
  }
}

TEST_CASE("heat markers and boundary types") {
  const BenchmarkProblem p = heat2d();
  const Mesh m = p.make_mesh(4);
  const PdeDefinition pde = p.make_pde(m);
  int count[5] = {};
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) {
    ++count[pde.bf_mark[f]];
    CHECK(pde.bftype(f, 0) == (pde.bf_mark[f] == 2 || pde.bf_mark[f] == 3 ? 0 : 1));
  }
  CHECK(count[1] == 4);
  CHECK(count[2] == 4);
  CHECK(count[3] == 4);
  CHECK(count[4] == 4);
}

TEST_CASE("combustion domain, markers and initial state") {
  const Mesh m = combustion_mesh(1);
  CHECK(total_volume(m) == doctest::Approx(15 * 16 + 15 * 8 + 30 * 16).epsilon(1e-12));
  CHECK(m.num_elements() == 2 * (15 * 16 + 15 * 8 + 30 * 16));
  CHECK(free_boundary(m).rows() == m.num_boundary_facets());
  const BenchmarkProblem p = combustion2d();
  const PdeDefinition pde = p.make_pde(m);
  double len[4] = {};
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) {
    len[pde.bf_mark[f]] += facet_measure(m, f);
    CHECK(pde.bftype(f, 0) == (pde.bf_mark[f] == 2 ? 1 : 0));
    CHECK(pde.bftype(f, 1) == pde.bftype(f, 0));
  }
  CHECK(len[2] == doctest::Approx(16));
  CHECK(len[3] == doctest::Approx(2 * (4 + 4) + 2 * 15));
  CHECK(len[1] == doctest::Approx(15 + 15 + 30 + 30 + 16));
  const RealTable U = p.initial(m.X);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    CHECK(U(v, 0) >= 0);
    CHECK(U(v, 0) <= 1);
    CHECK(U(v, 1) >= 0);
    CHECK(U(v, 1) <= 1);
    if (m.X(v, 0) == 0) {
      CHECK(U(v, 0) == 1.0);
      CHECK(U(v, 1) == 0.0);
    }
  }
  CHECK(combustion_rate(1.0, 1.0) == doctest::Approx(50.0));
  CHECK(combustion_rate(0.0, 1.0) == doctest::Approx(50.0 * std::exp(-10.0 / 0.2)));
}

TEST_CASE("problem registry") {
  const auto names = problem_names();
  CHECK(names.size() == 4);
  for (const auto& n : names) {
    const BenchmarkProblem p = make_problem(n);
    CHECK(p.name == n);
    const Mesh m = p.make_mesh(p.name == "combustion2d" ? 1 : 3);
    CHECK(m.dim == p.dim);
    CHECK(p.initial(m.X).cols() == static_cast<std::size_t>(p.npde));
    CHECK_NOTHROW(p.make_pde(m).validate(m));
  }
  CHECK_THROWS_AS(make_problem("nope"), Error);
}
