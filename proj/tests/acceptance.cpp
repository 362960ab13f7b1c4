// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks; one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "mmpde/driver.hpp"
#include "mmpde/fem.hpp"
#include "mmpde/metric.hpp"
#include "mmpde/movmesh.hpp"
#include "mmpde/odeint.hpp"
#include "mmpde/quality.hpp"

using namespace mmpde;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

MetricField random_metric(std::mt19937& rng, int d, std::size_t n) {
  MetricField M(d, n);
  for (std::size_t v = 0; v < n; ++v) M.set(v, testing::random_spd(rng, d));
  return M;
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Outcome gradient_check() {
  std::mt19937 rng(101);
  std::uniform_int_distribution<int> size(2, 4);
  MmpdeParams prm;
  double worst = 0;
  for (int d = 1; d <= 3; ++d)
    for (int trial = 0; trial < 50; ++trial) {
      const int n = d == 1 ? 3 + 2 * size(rng) : size(rng);
      const Mesh m = testing::jittered_box(d, n, 0.3, rng);
      const MetricField M = random_metric(rng, d, m.num_vertices());
      const RealTable* ref = trial % 2 ? &m.X : nullptr;
      const RealTable g = energy_grad(m, M, ref, prm);
      const double h = 1e-6 / n;
      Mesh p = m;
      double err = 0;
      for (std::size_t k = 0; k < m.X.size(); ++k) {
        p.X.data()[k] = m.X.data()[k] + h;
        const double ep = energy(p, M, ref, prm);
        p.X.data()[k] = m.X.data()[k] - h;
        const double em = energy(p, M, ref, prm);
        p.X.data()[k] = m.X.data()[k];
        err = std::max(err, std::abs((ep - em) / (2 * h) - g.data()[k]));
      }
      worst = std::max(worst, err / max_abs(g.data()));
    }
  return {worst < 1e-5, fmt("150 meshes, max rel. error %.2e", worst)};
}

Outcome scaling_check() {
  std::mt19937 rng(102);
  MmpdeParams prm;
  double worst = 0;
  for (int d = 1; d <= 3; ++d)
    for (int trial = 0; trial < 5; ++trial) {
      const Mesh m = testing::jittered_box(d, d == 3 ? 3 : 6, 0.3, rng);
      const MetricField M = random_metric(rng, d, m.num_vertices());
      MetricField M4 = M;
      for (double& x : M4.data()) x *= 4.0;
      const auto corners = find_corners(m);
      const RealTable v1 = mesh_velocity_x(m, M, prm, corners);
      const RealTable v4 = mesh_velocity_x(m, M4, prm, corners);
      double diff = 0;
      for (std::size_t k = 0; k < v1.size(); ++k) diff = std::max(diff, std::abs(v1.data()[k] - v4.data()[k]));
      worst = std::max(worst, diff / max_abs(v1.data()));
    }
  return {worst <= 1e-10, fmt("max rel. difference %.2e", worst)};
}

Outcome monotonicity_check() {
  std::mt19937 rng(103);
  MmpdeParams prm;
  const double tol = 10 * prm.abstol_or_default();
  double worst_rise = -1e300;
  int accepted = 0;
  bool decreased = true;
  for (int c = 0; c < 10; ++c) {
    const Mesh m = testing::jittered_box(2, 4 + c % 3, 0.25, rng);
    const MetricField M = random_metric(rng, 2, m.num_vertices());
    std::vector<double> e{energy(m, M, nullptr, prm)};
    move_x_metric({0.0, 0.05}, m, M, prm, find_corners(m), nullptr, [&](double, double v) { e.push_back(v); });
    for (std::size_t k = 1; k < e.size(); ++k) worst_rise = std::max(worst_rise, e[k] - e[k - 1]);
    accepted += static_cast<int>(e.size()) - 1;
    decreased = decreased && e.back() < e.front();
  }
  return {worst_rise <= tol && decreased && accepted > 10,
          fmt("%g accepted steps, largest increase %.2e (limit %.0e)", accepted, worst_rise, tol)};
}

Outcome radau_order_check() {
  const RhsFunction f = [](double, const Vector& y, Vector& dy) { dy = -10.0 * y; };
  const Vector y0 = Vector::Constant(1, 1.0);
  const double exact = std::exp(-10.0);
  const double e20 = std::abs(integrate_radau_fixed(f, y0, 0, 1, 20)[0] - exact);
  const double e40 = std::abs(integrate_radau_fixed(f, y0, 0, 1, 40)[0] - exact);
  const double ratio = e20 / e40;
  return {ratio >= 24 && ratio <= 40, fmt("errors %.3e, %.3e, ratio %.2f", e20, e40, ratio)};
}

Outcome poisson_check() {
  RunConfig c;
  c.problem = "poisson3d";
  c.moving = false;
  const BenchmarkProblem p = poisson3d();
  const Mesh m = p.make_mesh(8);
  const PdeDefinition pde = p.make_pde(m);
  int neumann = 0, dirichlet = 0;
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) (pde.bftype(f, 0) ? dirichlet : neumann)++;
  c.n = 8;
  const double e8 = run_ibvp(c).l2;
  c.n = 16;
  const double e16 = run_ibvp(c).l2;
  const double ratio = e8 / e16;
  return {ratio >= 3.2 && ratio <= 4.8 && neumann > 0 && dirichlet > 0,
          fmt("L2 %.3e (8^3), %.3e (16^3), ratio %.2f", e8, e16, ratio)};
}

Outcome heat_check() {
  RunConfig c;
  c.problem = "heat2d";
  c.moving = false;
  c.t_end = 0.1;
  c.fem.reltol = 1e-4;
  c.n = 20;
  const double e20 = run_ibvp(c).l2;
  c.n = 40;
  const double e40 = run_ibvp(c).l2;
  const double ratio = e20 / e40;
  return {ratio >= 3.0 && ratio <= 5.0, fmt("L2 %.3e (20x20), %.3e (40x40), ratio %.2f", e20, e40, ratio)};
}

Outcome burgers_check() {
  RunConfig c;
  c.problem = "burgers1d";
  c.n = 60;
  c.mmpde.tau = 1e-2;
  c.t_end = 1.0;
  const RunSummary moving = run_ibvp(c);
  c.moving = false;
  const RunSummary fixed = run_ibvp(c);
  const double gain = fixed.linf / moving.linf;
  const bool ok = moving.mesh.num_vertices() == 61 && gain >= 3.0;
  return {ok, fmt("Linf moving %.3e, fixed %.3e, gain %.1fx", moving.linf, fixed.linf, gain)};
}

Outcome intersection_check() {
  const MetricField a = MatBatch::constant(1, SmallMat::diag(std::vector<double>{1, 4}));
  const MetricField b = MatBatch::constant(1, SmallMat::diag(std::vector<double>{3, 2}));
  const SmallMat r = metric_intersection(a, b).get(0);
  const bool exact = r(0, 0) == 3 && r(1, 1) == 4 && r(0, 1) == 0 && r(1, 0) == 0;
  std::mt19937 rng(108);
  std::normal_distribution<double> g;
  double worst = 1e300;
  for (int pair = 0; pair < 100; ++pair) {
    const int d = 2 + pair % 2;
    const MetricField m1 = random_metric(rng, d, 1), m2 = random_metric(rng, d, 1);
    const SmallMat M = metric_intersection(m1, m2).get(0), A = m1.get(0), B = m2.get(0);
    for (int k = 0; k < 1000; ++k) {
      std::vector<double> x(d);
      for (double& v : x) v = g(rng);
      auto q = [&](const SmallMat& S) {
        double s = 0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) s += x[i] * S(i, j) * x[j];
        return s;
      };
      const double lo = std::max(q(A), q(B));
      worst = std::min(worst, (q(M) - lo) / lo);
    }
  }
  return {exact && worst >= -1e-12, fmt("diag case exact: %g, min relative margin %.2e", exact, worst)};
}

Outcome machinery_check() {
  bool ok = true;
  double vol_err = 0;
  for (int d = 1; d <= 3; ++d) {
    const auto x = linspace(0, 1, 3);
    const Mesh m = d == 1 ? line_mesh(x) : d == 2 ? rect2tri(x, x, 2) : cube2tet(x, x, x);
    const Mesh f = uniform_refine(m, 1).fine;
    ok = ok && f.num_elements() == m.num_elements() * (1u << d);
    vol_err = std::max(vol_err, std::abs(total_volume(f) - total_volume(m)) / total_volume(m));
  }
  ok = ok && vol_err <= 1e-12;

  std::mt19937 rng(109);
  double lam_over = 0;
  for (int d = 1; d <= 3; ++d) {
    const MetricField M = random_metric(rng, d, 200);
    MetricField big = M;
    for (double& v : big.data()) v *= 10;
    const MetricField C = eig_ceiling(big, 7.5);
    for (std::size_t k = 0; k < C.size(); ++k) lam_over = std::max(lam_over, sym_eig(C.get(k)).lambda[d - 1] - 7.5);
  }
  ok = ok && lam_over <= 7.5 * 1e-14;

  double interp_err = 0;
  std::uniform_real_distribution<double> u(0, 1);
  for (int d = 2; d <= 3; ++d) {
    const Mesh m = testing::jittered_box(d, 4, 0.3, rng);
    RealTable f(m.num_vertices(), 1);
    auto affine = [d](std::span<const double> p) {
      double s = 0.3;
      for (int i = 0; i < d; ++i) s += (i + 1.5) * p[i];
      return s;
    };
    for (std::size_t v = 0; v < m.num_vertices(); ++v) f(v, 0) = affine(m.X.row(v));
    RealTable q(200, d);
    for (double& v : q.data()) v = u(rng);
    const RealTable r = lin_interp(f, m, q);
    for (std::size_t k = 0; k < q.rows(); ++k) interp_err = std::max(interp_err, std::abs(r(k, 0) - affine(q.row(k))));
  }
  ok = ok && interp_err <= 1e-12;
  return {ok, fmt("volume rel. error %.1e, eigenvalue excess %.1e, interpolation error %.1e", vol_err, lam_over,
                  interp_err)};
}

double theta_front(const Mesh& m, const RealTable& U) {
  double sx = 0;
  int cnt = 0;
  for (std::size_t k = 0; k < m.num_elements(); ++k)
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) {
        const Index i = m.tri(k, a), j = m.tri(k, b);
        const double ti = U(i, 0) - 0.5, tj = U(j, 0) - 0.5;
        if (ti * tj < 0) {
          const double s = ti / (ti - tj);
          sx += m.X(i, 0) + s * (m.X(j, 0) - m.X(i, 0));
          ++cnt;
        }
      }
  return cnt ? sx / cnt : std::nan("");
}

Outcome combustion_check() {
  RunConfig c;
  c.problem = "combustion2d";
  c.t_end = 2.0;
  double tmin = 1e300, tmax = -1e300, f0 = std::nan(""), f1 = std::nan("");
  bool finite = true;
  const RunSummary s = run_ibvp(c, [&](double, const Mesh& m, const RealTable& U) {
    for (std::size_t v = 0; v < U.rows(); ++v) {
      finite = finite && std::isfinite(U(v, 0)) && std::isfinite(U(v, 1));
      tmin = std::min(tmin, U(v, 0));
      tmax = std::max(tmax, U(v, 0));
    }
    if (std::isnan(f0)) f0 = theta_front(m, U);
    f1 = theta_front(m, U);
  });
  const bool ok = finite && s.t_final == 2.0 && tmin >= 0 && tmax <= 1.05 && f1 > f0 && s.min_kmin > 0;
  return {ok, fmt("%g triangles, theta in [%.3g, ", s.mesh.num_elements(), tmin) +
                  fmt("%.4f], front x %.2f -> ", tmax, f0) + fmt("%.2f", f1)};
}

Outcome quality_check() {
  double dev = 0;
  for (int d = 1; d <= 3; ++d) {
    const auto x = linspace(0, 1, 4);
    const Mesh m = d == 1 ? line_mesh(x) : d == 2 ? rect2tri(x, x, 2) : cube2tet(x, x, x);
    const QualityReport q = quality_measures(m, MetricField::identity(d, m.num_vertices()), true, &m.X);
    dev = std::max({dev, std::abs(q.qeq - 1), std::abs(q.qali - 1), std::abs(q.qgeo - 1)});
  }
  const Mesh m = line_mesh(linspace(0, 1, 40));
  auto sample = [](const RealTable& X) {
    MetricField M(1, X.rows());
    for (std::size_t v = 0; v < X.rows(); ++v) {
      const double z = X(v, 0) - 0.5;
      M.set(v, SmallMat::diag(std::vector<double>{1.0 + 50.0 * std::exp(-200.0 * z * z)}));
    }
    return M;
  };
  MmpdeParams prm;
  const double q0 = quality_measures(m, sample(m.X), true, &m.X).qeq;
  Mesh cur = m;
  for (int it = 0; it < 5; ++it) cur.X = move_xi({0.0, 1.0}, m.X, cur, sample(cur.X), prm, {}).Xnew;
  const double q1 = quality_measures(cur, sample(cur.X), true, &m.X).qeq;
  return {dev <= 1e-10 && q0 / q1 >= 2.0,
          fmt("uniform deviation %.1e; Qeq,max %.3f -> %.3f", dev, q0, q1)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"energy gradient matches finite differences", gradient_check},
      {"mesh velocity invariant under metric scaling", scaling_check},
      {"meshing functional non-increasing along the flow", monotonicity_check},
      {"Radau IIA fifth-order convergence", radau_order_check},
      {"3D Poisson second-order L2 convergence", poisson_check},
      {"2D heat second-order L2 convergence", heat_check},
      {"1D Burgers moving mesh at least 3x better than fixed", burgers_check},
      {"metric intersection", intersection_check},
      {"refinement, eigenvalue ceiling and interpolation", machinery_check},
      {"2D combustion smoke run", combustion_check},
      {"quality measures", quality_check},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %2zu. %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
