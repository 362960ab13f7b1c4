// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

namespace mmpde {

/// Quadrature on the reference simplex in barycentric coordinates. Weights
/// sum to 1; multiply by the simplex measure.
struct QuadRule {
  int dim = 0;
  std::vector<std::array<double, 4>> bary;
  std::vector<double> weights;
  std::size_t size() const noexcept { return weights.size(); }
};

/// Rule exact for polynomials up to `degree` on a dim-simplex. Available:
/// dim 0 (any degree), dim 1 (<= 5), dim 2 and 3 (<= 5).
QuadRule simplex_rule(int dim, int degree);

}  // namespace mmpde
