// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mmpde/fem.hpp"
#include "mmpde/mesh.hpp"

namespace mmpde {

/// A benchmark: mesh factory, weak form, initial data and (optionally) the
/// exact solution.
struct BenchmarkProblem {
  std::string name;
  int dim = 1;
  int npde = 1;
  bool steady = false;
  double t_begin = 0.0;
  double t_end = 1.0;
  /// Mesh for a resolution of n cells per unit length (or per side of the
  /// unit interval / square / cube).
  std::function<Mesh(int n)> make_mesh;
  int default_n = 0;
  /// Boundary markers and the weak form for a mesh built by make_mesh (or
  /// any mesh of the same domain).
  std::function<PdeDefinition(const Mesh&)> make_pde;
  /// Initial (or starting) values, N_v x npde.
  std::function<RealTable(const RealTable& X)> initial;
  ExactFn uexact;  // empty when no closed form exists
  std::map<std::string, double> params;
};

/// u_t = eps u_xx - u u_x on (0, 1), eps = 1e-3, Dirichlet data and initial
/// values from the travelling-front exact solution.
BenchmarkProblem burgers1d();
/// u_t = Laplace u + (13 pi^2 - 1) u_exact on the unit square,
/// u_exact = exp(-t) sin(2 pi x) sin(3 pi y); markers 4 (x = 0), 2 (x = 1),
/// 3 (y = 1), 1 (y = 0).
BenchmarkProblem heat2d();
/// Thermal-diffusive combustion model (theta, Y) in the notched channel;
/// markers 2 (inlet x = 0), 3 (notch walls), 1 (elsewhere).
BenchmarkProblem combustion2d();
/// -Laplace u = 14 pi^2 u_exact on the unit cube, Neumann on x = 1 (marker
/// 2), Dirichlet elsewhere.
BenchmarkProblem poisson3d();

/// Exact solutions, pointwise.
double burgers_exact(double t, double x, double eps = 1e-3);
double heat_exact(double t, double x, double y);
double poisson_exact(double x, double y, double z);

/// Reaction rate beta^2/(2 Le) Y exp(-beta (1 - theta) / (1 - alpha (1 - theta))).
double combustion_rate(double theta, double Y, double le = 1.0, double alpha = 0.8, double beta = 10.0);

/// The notched channel: [0,15]x[0,16] + [15,30]x[4,12] + [30,60]x[0,16]
/// with n cells per unit length.
Mesh combustion_mesh(int n);

/// Names accepted by make_problem.
std::vector<std::string> problem_names();
BenchmarkProblem make_problem(const std::string& name);

}  // namespace mmpde
