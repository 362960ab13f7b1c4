// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "mmpde/mesh.hpp"
#include "mmpde/smallmat.hpp"

namespace mmpde {

/// Per-vertex SPD tensor field (n = N_v).
using MetricField = MatBatch;

/// Constant P1 gradient on every element (N x d).
RealTable grad_k_recovery(std::span<const double> u, const Mesh& m);

/// Volume-weighted average of element gradients at each vertex (N_v x d).
RealTable grad_recovery(std::span<const double> u, const Mesh& m);

struct GradHessian {
  RealTable grad;
  MatBatch hessian;
};
/// Two-pass volume-weighted recovery; the Hessian is the symmetrised
/// recovered gradient of the recovered gradient.
GradHessian grad_hessian_recovery(std::span<const double> u, const Mesh& m);

/// sqrt(1 + sum_k |grad u_k|^2) I for u of size N_v x npde.
MetricField metric_arclength(const RealTable& u, const Mesh& m);

/// Interpolation-error based metric: A = I + |H|/alpha scaled by
/// det(A)^{-1/(d+4)} (order 0, L2 norm) or det(A)^{-1/(d+2)} (order 1, H1
/// seminorm).
MetricField metric_hessian(std::span<const double> u, const Mesh& m, double alpha, int order);
/// As metric_hessian with |H| replaced by ||H||_2 I.
MetricField metric_iso(std::span<const double> u, const Mesh& m, double alpha, int order);

/// Builds the metric from a precomputed Hessian field.
MetricField metric_from_hessian(const MatBatch& hessian, double alpha, int order, bool isotropic);

/// A Hessian-intensity alpha: the volume mean of ||H_K||_2^q raised to 1/q,
/// q = d/(d+4) (order 0) or d/(d+2) (order 1). Falls back to 1 for (near)
/// affine data.
double default_alpha(const MatBatch& hessian, const Mesh& m, int order);

/// Intersection through simultaneous diagonalisation; element-wise max for
/// diagonal pairs.
MetricField metric_intersection(const MetricField& m1, const MetricField& m2);

/// ncycles rounds of volume-weighted local averaging.
MetricField metric_smoothing(const MetricField& M, int ncycles, const Mesh& m);

/// Transfers a fine-mesh field to the coarse mesh it was refined from.
MetricField metric_f2c(const MetricField& M_fine, const Mesh& fine, std::span<const Index> parent,
                       const Mesh& coarse);

/// Throws NotSpd unless every matrix is symmetric positive definite.
void check_spd(const MatBatch& M, const char* who);

}  // namespace mmpde
