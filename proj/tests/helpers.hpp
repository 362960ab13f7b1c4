// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <random>

#include "mmpde/mesh.hpp"
#include "mmpde/smallmat.hpp"

namespace testing {

inline mmpde::SmallMat random_spd(std::mt19937& rng, int d, double lo = 0.5, double hi = 3.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), l(lo, hi);
  mmpde::SmallMat q(d);
  for (int k = 0; k < d * d; ++k) q.a[k] = u(rng);
  // orthogonalise columns
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < j; ++k) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += q(i, j) * q(i, k);
      for (int i = 0; i < d; ++i) q(i, j) -= s * q(i, k);
    }
    double n = 0.0;
    for (int i = 0; i < d; ++i) n += q(i, j) * q(i, j);
    for (int i = 0; i < d; ++i) q(i, j) /= std::sqrt(n);
  }
  std::array<double, 3> lam{};
  for (int i = 0; i < d; ++i) lam[i] = l(rng);
  return mmpde::symmetrize(mmpde::compose(q, std::span<const double>(lam.data(), d)));
}

/// Unit box mesh with n intervals per side and interior vertices jittered by
/// `jitter` times the spacing.
inline mmpde::Mesh jittered_box(int d, int n, double jitter, std::mt19937& rng) {
  const auto x = mmpde::linspace(0.0, 1.0, n);
  mmpde::Mesh m = d == 1 ? mmpde::line_mesh(x) : d == 2 ? mmpde::rect2tri(x, x, 2) : mmpde::cube2tet(x, x, x);
  std::uniform_real_distribution<double> u(-jitter / n, jitter / n);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    bool interior = true;
    for (int i = 0; i < d; ++i)
      if (m.X(v, i) < 1e-12 || m.X(v, i) > 1 - 1e-12) interior = false;
    if (!interior) continue;
    for (int i = 0; i < d; ++i) m.X(v, i) += u(rng);
  }
  return m;
}

}  // namespace testing
