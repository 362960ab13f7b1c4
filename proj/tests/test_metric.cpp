// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "mmpde/error.hpp"
#include "mmpde/metric.hpp"

using namespace mmpde;

namespace {

std::vector<double> sample(const Mesh& m, double (*f)(const double*)) {
  std::vector<double> u(m.num_vertices());
  for (std::size_t v = 0; v < u.size(); ++v) u[v] = f(m.X.row(v).data());
  return u;
}

bool interior(const Mesh& m, std::size_t v) {
  for (int i = 0; i < m.dim; ++i)
    if (m.X(v, i) < 1e-12 || m.X(v, i) > 1 - 1e-12) return false;
  return true;
}

double lambda_min(const MetricField& M, std::size_t v) { return sym_eig(M.get(v)).lambda[0]; }

}  // namespace

TEST_CASE("element gradients") {
  std::mt19937 rng(10);
  const Mesh m = testing::jittered_box(2, 5, 0.3, rng);
  const RealTable g = grad_k_recovery(sample(m, [](const double* x) { return x[0]; }), m);
  for (std::size_t k = 0; k < g.rows(); ++k) {
    CHECK(g(k, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(g(k, 1)) < 1e-12);
  }
  const RealTable z = grad_k_recovery(std::vector<double>(m.num_vertices(), 3.0), m);
  for (double v : z.data()) CHECK(std::abs(v) < 1e-12);
  // u = x^2: element gradient ~ 2 x_centroid, O(h)
  const auto x = linspace(0, 1, 32);
  const Mesh fine = rect2tri(x, x, 2);
  const RealTable gq = grad_k_recovery(sample(fine, [](const double* p) { return p[0] * p[0]; }), fine);
  for (std::size_t k = 0; k < gq.rows(); ++k) {
    double cx = 0.0;
    for (int a = 0; a < 3; ++a) cx += fine.X(fine.tri(k, a), 0) / 3.0;
    CHECK(std::abs(gq(k, 0) - 2 * cx) < 2.0 / 32);
  }
}

TEST_CASE("vertex gradient recovery") {
  std::mt19937 rng(11);
  const Mesh m = testing::jittered_box(3, 3, 0.2, rng);
  const RealTable g = grad_recovery(sample(m, [](const double* p) { return 1 + 2 * p[0] - p[1] + 0.5 * p[2]; }), m);
  for (std::size_t v = 0; v < g.rows(); ++v) {
    CHECK(g(v, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(g(v, 1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(g(v, 2) == doctest::Approx(0.5).epsilon(1e-12));
  }
  // symmetric mesh (4 triangles per cell): interior vertex gradients of x^2
  const auto x = linspace(0, 1, 10);
  const Mesh s = rect2tri(x, x, 1);
  const RealTable gs = grad_recovery(sample(s, [](const double* p) { return p[0] * p[0]; }), s);
  for (std::size_t v = 0; v < s.num_vertices(); ++v)
    if (interior(s, v)) CHECK(gs(v, 0) == doctest::Approx(2 * s.X(v, 0)).epsilon(1e-10));
  // boundary vertices: one-sided, first order
  double e1 = 0.0, e2 = 0.0;
  for (int n : {10, 20}) {
    const auto xn = linspace(0, 1, n);
    const Mesh mn = rect2tri(xn, xn, 2);
    const RealTable gn = grad_recovery(sample(mn, [](const double* p) { return p[0] * p[0]; }), mn);
    double e = 0.0;
    for (std::size_t v = 0; v < mn.num_vertices(); ++v) e = std::max(e, std::abs(gn(v, 0) - 2 * mn.X(v, 0)));
    (n == 10 ? e1 : e2) = e;
  }
  CHECK(e1 / e2 > 1.6);
}

TEST_CASE("Hessian recovery") {
  std::mt19937 rng(12);
  const Mesh m = testing::jittered_box(2, 5, 0.3, rng);
  const GradHessian gh = grad_hessian_recovery(sample(m, [](const double* p) { return 3 * p[0] - p[1]; }), m);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const SmallMat h = gh.hessian.get(v);
    CHECK(max_abs(h) < 1e-10);
    CHECK(is_symmetric(h));
  }
  std::vector<double> err;
  for (int n : {8, 16, 32}) {
    const auto x = linspace(0, 1, n);
    const Mesh s = rect2tri(x, x, 1);
    const GradHessian q = grad_hessian_recovery(sample(s, [](const double* p) { return p[0] * p[0]; }), s);
    double e = 0.0;
    for (std::size_t v = 0; v < s.num_vertices(); ++v) {
      // stay two layers from the boundary, where recovery is one-sided
      bool deep = true;
      for (int i = 0; i < 2; ++i) deep = deep && s.X(v, i) > 2.0 / n - 1e-12 && s.X(v, i) < 1 - 2.0 / n + 1e-12;
      if (!deep) continue;
      const SmallMat h = q.hessian.get(v);
      e = std::max({e, std::abs(h(0, 0) - 2), std::abs(h(0, 1)), std::abs(h(1, 1))});
    }
    err.push_back(e);
  }
  CHECK(err[2] < 1e-8 + 0.6 * err[0]);
  CHECK(err[2] < 1e-6);
}

TEST_CASE("arclength metric") {
  const auto x = linspace(0, 1, 8);
  const Mesh m1 = line_mesh(x);
  RealTable c(m1.num_vertices(), 1, 2.0);
  const MetricField I = metric_arclength(c, m1);
  for (std::size_t v = 0; v < I.size(); ++v) CHECK(I.get(v)(0, 0) == doctest::Approx(1.0));
  RealTable lin(m1.num_vertices(), 1);
  for (std::size_t v = 0; v < lin.rows(); ++v) lin(v, 0) = m1.X(v, 0);
  const MetricField A = metric_arclength(lin, m1);
  for (std::size_t v = 0; v < A.size(); ++v) CHECK(A.get(v)(0, 0) == doctest::Approx(std::sqrt(2.0)));
  // steep ramp: metric is largest where the slope is
  const auto xf = linspace(0, 1, 100);
  const Mesh mf = line_mesh(xf);
  RealTable ramp(mf.num_vertices(), 1);
  for (std::size_t v = 0; v < ramp.rows(); ++v) ramp(v, 0) = std::tanh(50 * (mf.X(v, 0) - 0.5));
  const MetricField R = metric_arclength(ramp, mf);
  std::size_t best = 0;
  for (std::size_t v = 0; v < R.size(); ++v)
    if (R.get(v)(0, 0) > R.get(best)(0, 0)) best = v;
  CHECK(std::abs(mf.X(best, 0) - 0.5) < 0.02);
}

TEST_CASE("Hessian metric") {
  const auto x = linspace(0, 1, 10);
  const Mesh m = line_mesh(x);
  const auto aff = sample(m, [](const double* p) { return 1 - 2 * p[0]; });
  for (int order : {0, 1}) {
    const MetricField M = metric_hessian(aff, m, 1.0, order);
    for (std::size_t v = 0; v < M.size(); ++v) CHECK(M.get(v)(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
  }
  const MetricField M = metric_hessian(sample(m, [](const double* p) { return p[0] * p[0]; }), m, 1.0, 0);
  for (std::size_t v = 2; v + 2 < m.num_vertices(); ++v)
    CHECK(M.get(v)(0, 0) == doctest::Approx(std::pow(3.0, 0.8)).epsilon(1e-10));
  CHECK_THROWS_AS(metric_hessian(aff, m, 0.0, 0), Error);
}

TEST_CASE("Hessian metrics are SPD and tend to identity for large alpha") {
  std::mt19937 rng(13);
  const Mesh m = testing::jittered_box(2, 8, 0.3, rng);
  const auto u = sample(m, [](const double* p) { return std::sin(5 * p[0]) * std::exp(p[1]) + 10 * p[0] * p[1]; });
  for (int order : {0, 1}) {
    for (bool iso : {false, true}) {
      const MetricField M = iso ? metric_iso(u, m, 0.5, order) : metric_hessian(u, m, 0.5, order);
      for (std::size_t v = 0; v < M.size(); ++v) {
        CHECK(lambda_min(M, v) > 0.0);
        CHECK(is_symmetric(M.get(v)));
      }
      const MetricField B = iso ? metric_iso(u, m, 1e12, order) : metric_hessian(u, m, 1e12, order);
      for (std::size_t v = 0; v < B.size(); ++v) {
        const SmallMat d = B.get(v) - SmallMat::identity(2);
        CHECK(max_abs(d) < 1e-9);
      }
    }
  }
  const GradHessian gh = grad_hessian_recovery(u, m);
  CHECK(default_alpha(gh.hessian, m, 1) > 0.0);
  CHECK(default_alpha(MatBatch(2, m.num_vertices()), m, 1) == 1.0);
}

TEST_CASE("metric intersection") {
  MetricField a(2, 1), b(2, 1);
  a.set(0, SmallMat::diag(std::vector<double>{1.0, 4.0}));
  b.set(0, SmallMat::diag(std::vector<double>{3.0, 2.0}));
  const SmallMat r = metric_intersection(a, b).get(0);
  CHECK(r(0, 0) == 3.0);
  CHECK(r(1, 1) == 4.0);
  CHECK(r(0, 1) == 0.0);
  CHECK(metric_intersection(b, a).data() == metric_intersection(a, b).data());

  std::mt19937 rng(14);
  std::normal_distribution<double> g;
  for (int d = 2; d <= 3; ++d) {
    MetricField m1(d, 30), m2(d, 30);
    for (std::size_t i = 0; i < 30; ++i) {
      m1.set(i, testing::random_spd(rng, d, 0.1, 10.0));
      m2.set(i, testing::random_spd(rng, d, 0.1, 10.0));
    }
    const MetricField mi = metric_intersection(m1, m2);
    const MetricField same = metric_intersection(m1, m1);
    for (std::size_t i = 0; i < 30; ++i) {
      for (int k = 0; k < d * d; ++k) CHECK(same.get(i).a[k] == doctest::Approx(m1.get(i).a[k]).epsilon(1e-10));
      for (int trial = 0; trial < 100; ++trial) {
        std::array<double, 3> x{};
        for (int k = 0; k < d; ++k) x[k] = g(rng);
        auto quad = [&](const SmallMat& M) {
          double s = 0.0;
          for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) s += x[r] * M(r, c) * x[c];
          return s;
        };
        const double q = quad(mi.get(i));
        CHECK(q >= quad(m1.get(i)) * (1 - 1e-10));
        CHECK(q >= quad(m2.get(i)) * (1 - 1e-10));
      }
    }
  }
  MetricField bad(2, 1);
  bad.set(0, SmallMat::diag(std::vector<double>{1.0, -1.0}));
  CHECK_THROWS_AS(metric_intersection(a, bad), Error);
}

TEST_CASE("metric smoothing") {
  std::mt19937 rng(15);
  const Mesh m = testing::jittered_box(2, 6, 0.3, rng);
  const SmallMat c = testing::random_spd(rng, 2);
  const MetricField C = MetricField::constant(m.num_vertices(), c);
  const MetricField S = metric_smoothing(C, 3, m);
  for (std::size_t v = 0; v < S.size(); ++v)
    for (int k = 0; k < 4; ++k) CHECK(S.get(v).a[k] == doctest::Approx(c.a[k]).epsilon(1e-12));
  CHECK(metric_smoothing(C, 0, m).data() == C.data());
  MetricField spike = MetricField::identity(2, m.num_vertices());
  spike.set(20, 100.0 * SmallMat::identity(2));
  double prev = 100.0;
  for (int cyc = 1; cyc <= 4; ++cyc) {
    const MetricField s = metric_smoothing(spike, cyc, m);
    double mx = 0.0;
    for (std::size_t v = 0; v < s.size(); ++v) mx = std::max(mx, sym_eig(s.get(v)).lambda[1]);
    CHECK(mx < prev);
    prev = mx;
  }
}

TEST_CASE("fine-to-coarse metric transfer") {
  const auto x = linspace(0, 1, 4);
  const Mesh coarse = rect2tri(x, x, 2);
  const RefinedMesh r = uniform_refine(coarse, 2);
  std::mt19937 rng(16);
  const SmallMat c = testing::random_spd(rng, 2);
  const MetricField C = metric_f2c(MetricField::constant(r.fine.num_vertices(), c), r.fine, r.parent, coarse);
  for (std::size_t v = 0; v < C.size(); ++v)
    for (int k = 0; k < 4; ++k) CHECK(C.get(v).a[k] == doctest::Approx(c.a[k]).epsilon(1e-12));
  MetricField lin(2, r.fine.num_vertices());
  for (std::size_t v = 0; v < lin.size(); ++v) lin.set(v, (1.0 + r.fine.X(v, 0)) * SmallMat::identity(2));
  const MetricField L = metric_f2c(lin, r.fine, r.parent, coarse);
  for (std::size_t v = 0; v < L.size(); ++v) {
    CHECK(std::abs(L.get(v)(0, 0) - (1.0 + coarse.X(v, 0))) < 1.0 / 3);
    CHECK(lambda_min(L, v) > 0.0);
  }
  std::vector<Index> bad(r.parent.begin(), r.parent.end());
  bad[0] = 99;
  CHECK_THROWS_AS(metric_f2c(lin, r.fine, bad, coarse), Error);
}
