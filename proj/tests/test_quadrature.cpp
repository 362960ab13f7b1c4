// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>

#include "doctest.h"
#include "mmpde/quadrature.hpp"

using namespace mmpde;

namespace {

double fact(int n) { return n <= 1 ? 1.0 : n * fact(n - 1); }

// Mean of prod lambda_i^{a_i} over the simplex: d! prod a_i! / (d + sum a_i)!.
double exact_mean(int d, const std::array<int, 4>& a) {
  double num = fact(d);
  int s = 0;
  for (int i = 0; i <= d; ++i) {
    num *= fact(a[i]);
    s += a[i];
  }
  return num / fact(d + s);
}

void check_rule(int d, int degree) {
  const QuadRule r = simplex_rule(d, degree);
  double wsum = 0.0;
  for (double w : r.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
  for (const auto& b : r.bary) {
    double s = 0.0;
    for (int i = 0; i <= d; ++i) {
      s += b[i];
      CHECK(b[i] >= 0.0);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
  std::array<int, 4> a{};
  // all exponent tuples with total degree <= degree
  const int n = d + 1;
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n) {
      double q = 0.0;
      for (std::size_t k = 0; k < r.size(); ++k) {
        double v = r.weights[k];
        for (int j = 0; j < n; ++j) v *= std::pow(r.bary[k][j], a[j]);
        q += v;
      }
      CHECK(q == doctest::Approx(exact_mean(d, a)).epsilon(1e-12));
      return;
    }
    for (int e = 0; e <= left; ++e) {
      a[i] = e;
      rec(i + 1, left - e);
    }
    a[i] = 0;
  };
  rec(0, degree);
}

}  // namespace

TEST_CASE("simplex rules integrate monomials exactly") {
  for (int d = 1; d <= 3; ++d)
    for (int deg = 0; deg <= 5; ++deg) {
      CAPTURE(d);
      CAPTURE(deg);
      check_rule(d, deg);
    }
  CHECK(simplex_rule(0, 3).size() == 1);
  CHECK(simplex_rule(2, 2).size() == 3);
  CHECK(simplex_rule(3, 2).size() == 4);
  CHECK(simplex_rule(2, 4).size() == 6);
  CHECK(simplex_rule(3, 4).size() == 14);
}
