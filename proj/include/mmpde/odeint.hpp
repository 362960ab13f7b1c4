// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mmpde/table.hpp"

namespace mmpde {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

using RhsFunction = std::function<void(double t, const Vector& y, Vector& dydt)>;

/// Initial value problem y' = rhs(t, y) on [t_begin, t_end].
struct OdeProblem {
  RhsFunction rhs;
  Vector y0;
  double t_begin = 0.0;
  double t_end = 1.0;
  double abstol = 1e-6;
  double reltol = 1e-3;
  double dt0 = 0.0;  // 0 picks (t_end - t_begin) / 10
  int max_steps = 200000;

  /// Stiff integrator only: for each column j, the rows i where dF_i/dy_j
  /// may be nonzero. Empty means dense.
  std::vector<std::vector<Index>> jac_pattern;
  /// Return false to reject a state (the step is then halved).
  std::function<bool(double t, const Vector& y)> admissible;
  /// Called after every accepted step.
  std::function<void(double t, const Vector& y)> observer;
  /// Consecutive rejections by `admissible` before giving up.
  int max_inadmissible = 20;
  std::function<void()> on_inadmissible_failure;
};

struct StepRecord {
  double t = 0.0;  // end of step
  double h = 0.0;
  double err = 0.0;
};

struct OdeSolution {
  Vector y;
  std::vector<StepRecord> steps;  // accepted steps
  int rejected = 0;
  long nfev = 0;
};

/// Dormand-Prince 5(4) with PI-free standard step control.
OdeSolution integrate_explicit(const OdeProblem& p);

/// Variable-step BDF of order 1-2 with finite-difference Jacobian (column
/// coloring when jac_pattern is given) and sparse LU.
OdeSolution integrate_stiff(const OdeProblem& p);

/// Greedy column coloring: columns sharing no row get the same color.
std::vector<int> color_columns(const std::vector<std::vector<Index>>& pattern, std::size_t nrows);

// ---- Radau IIA ---------------------------------------------------------------

/// Three-stage Radau IIA tableau (order 5, stiffly accurate).
struct RadauTableau {
  std::array<double, 3> c;
  std::array<std::array<double, 3>, 3> A;
  std::array<std::array<double, 3>, 3> W;  // A^{-1}
  static const RadauTableau& get();
};

/// Implicit system F(t, y, y') = 0.
struct ImplicitSystem {
  std::size_t size = 0;
  std::function<void(double t, const Vector& y, const Vector& yp, Vector& res)> residual;
  /// dF/dy and dF/dy' at (t, y, y').
  std::function<void(double t, const Vector& y, const Vector& yp, SparseMatrix& jy, SparseMatrix& jyp)> jacobian;
};

struct RadauOptions {
  int max_newton = 10;
  double newton_tol = 1e-3;  // relative to the weighted error norm
  double abstol = 1e-6;
  double reltol = 1e-4;
  bool direct_ls = true;
};

struct RadauStep {
  bool converged = false;
  std::array<Vector, 3> Y;   // stage values; Y[2] is y_{n+1}
  std::array<Vector, 3> Yp;  // stage derivatives
  int newton_iterations = 0;
};

/// One Radau IIA step from (t, y_n) with step h. yp_n is used to build the
/// initial stage guess. Newton uses one Jacobian evaluation per step.
RadauStep radau_step(const ImplicitSystem& sys, double t, const Vector& y_n, const Vector& yp_n, double h,
                     const RadauOptions& opt);

/// Convenience wrapper for an explicit ODE y' = f(t, y); the Jacobian is a
/// dense finite-difference approximation.
RadauStep radau_step(const RhsFunction& f, double t, const Vector& y_n, double h, const RadauOptions& opt);
ImplicitSystem explicit_ode_system(const RhsFunction& f, std::size_t n);

/// Previous accepted step, for the two-step estimator.
struct PrevStep {
  Vector y;  // y_{n-1}
  double h = 0.0;
};

/// Local error of the step just taken, from the cubic through y_{n-1}, y_n
/// and the first two stages extrapolated to the step end (quadratic through
/// y_n and the stages on the first step).
Vector two_step_error(const std::optional<PrevStep>& prev, const Vector& y_n, const RadauStep& cur, double h);

/// Weighted RMS norm with per-component weights (empty = all 1).
double error_norm(const Vector& err, const Vector& y0, const Vector& y1, double abstol, double reltol,
                  const std::vector<double>& weights = {});

/// min(5, max(0.2, 0.9 err^{-1/5})).
double step_factor(double err_norm);

/// Fixed-step Radau integration of y' = f(t, y).
Vector integrate_radau_fixed(const RhsFunction& f, const Vector& y0, double t0, double t1, int nsteps);

/// Adaptive Radau integration of y' = f(t, y) with the two-step estimator.
OdeSolution integrate_radau(const OdeProblem& p);

}  // namespace mmpde
