// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/quadrature.hpp"

#include <cmath>

#include "mmpde/error.hpp"

namespace mmpde {

namespace {

void add(QuadRule& r, std::array<double, 4> b, double w) {
  r.bary.push_back(b);
  r.weights.push_back(w);
}

// All distinct permutations of (a, a, b) in 2D.
void orbit21(QuadRule& r, double a, double b, double w) {
  add(r, {a, a, b, 0}, w);
  add(r, {a, b, a, 0}, w);
  add(r, {b, a, a, 0}, w);
}

// (a, a, a, b) in 3D.
void orbit31(QuadRule& r, double a, double b, double w) {
  add(r, {a, a, a, b}, w);
  add(r, {a, a, b, a}, w);
  add(r, {a, b, a, a}, w);
  add(r, {b, a, a, a}, w);
}

// (a, a, b, b) in 3D.
void orbit22(QuadRule& r, double a, double b, double w) {
  add(r, {a, a, b, b}, w);
  add(r, {a, b, a, b}, w);
  add(r, {a, b, b, a}, w);
  add(r, {b, a, a, b}, w);
  add(r, {b, a, b, a}, w);
  add(r, {b, b, a, a}, w);
}

QuadRule line_rule(int degree) {
  QuadRule r;
  r.dim = 1;
  auto gauss = [&](double xi, double w) { add(r, {0.5 * (1.0 - xi), 0.5 * (1.0 + xi), 0, 0}, w); };
  if (degree <= 1) {
    gauss(0.0, 1.0);
  } else if (degree <= 3) {
    const double s = 1.0 / std::sqrt(3.0);
    gauss(-s, 0.5);
    gauss(s, 0.5);
  } else {
    const double s = std::sqrt(0.6);
    gauss(-s, 5.0 / 18.0);
    gauss(0.0, 8.0 / 18.0);
    gauss(s, 5.0 / 18.0);
  }
  return r;
}

QuadRule triangle_rule(int degree) {
  QuadRule r;
  r.dim = 2;
  if (degree <= 1) {
    add(r, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0}, 1.0);
  } else if (degree == 2) {
    orbit21(r, 1.0 / 6, 2.0 / 3, 1.0 / 3);
  } else if (degree <= 4) {
    const double a1 = 0.445948490915965, a2 = 0.091576213509771;
    orbit21(r, a1, 1.0 - 2 * a1, 0.223381589678011);
    orbit21(r, a2, 1.0 - 2 * a2, 0.109951743655322);
  } else {
    const double a1 = 0.470142064105115, a2 = 0.101286507323456;
    add(r, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0}, 0.225);
    orbit21(r, a1, 1.0 - 2 * a1, 0.132394152788506);
    orbit21(r, a2, 1.0 - 2 * a2, 0.125939180544827);
  }
  return r;
}

QuadRule tet_rule(int degree) {
  QuadRule r;
  r.dim = 3;
  if (degree <= 1) {
    add(r, {0.25, 0.25, 0.25, 0.25}, 1.0);
  } else if (degree == 2) {
    const double a = 0.1381966011250105, b = 0.5854101966249685;
    orbit31(r, a, b, 0.25);
  } else {
    const double a1 = 0.31088591926330061, a2 = 0.09273525031089123, a3 = 0.04550370412564965;
    orbit31(r, a1, 1.0 - 3 * a1, 0.11268792571801585);
    orbit31(r, a2, 1.0 - 3 * a2, 0.07349304311636195);
    orbit22(r, a3, 0.5 - a3, 0.04254602077708147);
  }
  return r;
}

}  // namespace

QuadRule simplex_rule(int dim, int degree) {
  require(degree >= 0 && degree <= 5, "quadrature degree must be in [0, 5]");
  switch (dim) {
    case 0: {
      QuadRule r;
      add(r, {1, 0, 0, 0}, 1.0);
      return r;
    }
    case 1:
      return line_rule(degree);
    case 2:
      return triangle_rule(degree);
    case 3:
      return tet_rule(degree);
    default:
      throw Error(ErrorCode::InvalidArgument, "quadrature dimension must be 0..3");
  }
}

}  // namespace mmpde
