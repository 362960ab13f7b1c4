// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mmpde/mesh.hpp"
#include "mmpde/odeint.hpp"

namespace mmpde {

/// Arguments of a volume integrand batch: one row per quadrature point.
/// du is nq x (d*npde) with the gradient of component c in columns
/// c*d .. c*d+d-1; v and dv are the test function of equation i and its
/// gradient.
struct VolumeArgs {
  const RealTable& du;
  const RealTable& u;
  const RealTable& ut;
  const RealTable& dv;
  std::span<const double> v;
  const RealTable& x;
  double t;
  int i;
};

/// Boundary integrand batch over points on Neumann facets; mark holds the
/// facet marker of each point.
struct BoundaryArgs {
  const RealTable& du;
  const RealTable& u;
  std::span<const double> v;
  const RealTable& x;
  double t;
  int i;
  std::span<const int> mark;
};

/// Dirichlet residual batch over vertices.
struct DirichletArgs {
  const RealTable& u;
  const RealTable& x;
  double t;
  int i;
  std::span<const int> mark;
};

/// Each callback returns one value per row of its batch.
using VolumeFn = std::function<std::vector<double>(const VolumeArgs&)>;
using BoundaryFn = std::function<std::vector<double>(const BoundaryArgs&)>;
using DirichletFn = std::function<std::vector<double>(const DirichletArgs&)>;

/// Weak form
///   sum_i int F_i(du, u, ut, dv_i, v_i, x, t) + sum_i int_{Neumann_i} G_i = 0,
///   R_i(u, x, t) = 0 on Dirichlet_i.
/// bftype(f, i) is 1 for Dirichlet and 0 for Neumann. A vertex carries a
/// Dirichlet row for component i if any of its facets is Dirichlet for i;
/// R receives the marker of the last such facet.
struct PdeDefinition {
  int npde = 1;
  std::vector<int> bf_mark;
  IndexTable bftype;
  VolumeFn volume_int;
  BoundaryFn boundary_int;
  DirichletFn dirichlet_res;

  void validate(const Mesh& m) const;
};

/// Global residual (N_v*npde, vertex-major: row v*npde + c). The mesh is m,
/// moving with nodal velocity Xdot; ut is evaluated as the Eulerian time
/// derivative sum_j Udot_j phi_j - grad(u_h) . sum_j Xdot_j phi_j.
Vector assemble_residual(const RealTable& U, const RealTable& Udot, const Mesh& m, const RealTable& Xdot,
                         const PdeDefinition& pde, double t);

/// Derivatives of the residual with respect to U and Udot.
void assemble_jacobian(const RealTable& U, const RealTable& Udot, const Mesh& m, const RealTable& Xdot,
                       const PdeDefinition& pde, double t, SparseMatrix& jy, SparseMatrix& jyp);

struct FemStepOptions {
  bool fixed_step = false;
  double reltol = 1e-4;
  double abstol = 1e-6;
  bool direct_ls = true;
  /// Nonnegative weights (N_v*npde, vertex-major) inside the step error
  /// norm; empty means all 1, zero drops a component.
  std::vector<double> control_weights;
};

/// State carried between consecutive steps (two-step estimator, initial
/// stage guess). Reset it when the solution is resampled.
struct StepHistory {
  std::optional<PrevStep> prev;
  Vector yp;
};

struct StepResult {
  RealTable Unew;
  double dt_used = 0.0;
  double dt_next = 0.0;
};

/// One Radau IIA step of the semi-discrete system on the mesh
/// X(s) = X + (s - t) Xdot. With fixed_step false the step may be shortened
/// (dt_used <= dt); dt_next is the predicted next step.
StepResult movfem_step(double t, double dt, const RealTable& U, const Mesh& m, const RealTable& Xdot,
                       const PdeDefinition& pde, const FemStepOptions& opt = {}, StepHistory* history = nullptr);

/// Solves R_i = 0 at the Dirichlet vertices by scalar Newton, component by
/// component, leaving the other rows untouched.
RealTable project_dirichlet(const RealTable& U, const Mesh& m, const PdeDefinition& pde, double t);

struct BvpOptions {
  int max_iter = 300;
  double tol = 1e-6;
  bool direct_ls = true;
};

struct BvpResult {
  RealTable U;
  int iterations = 0;
  double residual = 0.0;
};

/// Damped Newton on the steady residual (ut = 0, t = 0); converged when
/// the max-norm of the residual is <= tol.
BvpResult movfem_bvp(const RealTable& U0, const Mesh& m, const PdeDefinition& pde, const BvpOptions& opt = {});

/// Exact solution u(t, x): nq x d points in, nq x npde values out.
using ExactFn = std::function<RealTable(double t, const RealTable& x)>;

/// L2 norm of u - u_h over all components, degree-4 quadrature.
double error_p1_l2(const ExactFn& uexact, double t, const Mesh& m, const RealTable& U);
/// Max of |u - u_h| over the degree-4 quadrature points and the vertices.
double error_p1_linf(const ExactFn& uexact, double t, const Mesh& m, const RealTable& U);

}  // namespace mmpde
