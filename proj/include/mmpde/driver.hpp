// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "mmpde/fem.hpp"
#include "mmpde/metric.hpp"
#include "mmpde/movmesh.hpp"
#include "mmpde/problems.hpp"
#include "mmpde/quality.hpp"

namespace mmpde {

enum class MetricKind { Hessian, Iso, Arclength };

/// Metric pipeline applied to the current solution: metric, smoothing,
/// eigenvalue ceiling. Multi-component solutions intersect the
/// per-component metrics. alpha <= 0 selects default_alpha.
struct AdaptOptions {
  MetricKind kind = MetricKind::Hessian;
  double alpha = 0.0;
  int order = 1;
  int smoothing = 2;
  double ceiling = 1e4;
};

MetricField solution_metric(const RealTable& U, const Mesh& m, const AdaptOptions& opt);

struct RunConfig {
  std::string problem = "burgers1d";
  int n = 0;             // 0: problem default
  bool moving = true;
  double t_end = -1.0;   // < 0: problem default
  double dt = 1e-4;      // first physical step
  double dt_max = 0.0;   // 0: (t_end - t_begin) / 50
  int init_iterations = 5;
  int max_steps = 200000;
  MmpdeParams mmpde;
  FemStepOptions fem;
  AdaptOptions adapt;
  BvpOptions bvp;
  std::string output_dir;  // empty: no files
  double output_interval = 0.0;  // 0: initial and final state only
  bool write_vtk = true;

  void validate() const;
};

struct RunSummary {
  std::string problem;
  double t_final = 0.0;
  int steps = 0;
  int shortened_steps = 0;  // steps cut below the mesh-move interval
  double l2 = -1.0;    // -1 without exact solution
  double linf = -1.0;
  double min_kmin = 0.0;
  double qeq_max = 0.0;
  Mesh mesh;
  RealTable U;
  std::vector<std::string> files;
};

/// Called after every accepted physical step with (t, mesh, U).
using StepObserver = std::function<void(double t, const Mesh& m, const RealTable& U)>;

/// Moving-mesh (or fixed-mesh) solution of a benchmark problem: initial
/// mesh and fixed corners, adjusted initial mesh through repeated move_xi
/// on the initial data, then per step: metric from the solution, move_xi
/// over [t, t + dt], Xdot = (Xnew - X)/dt, movfem_step. Steady problems use
/// movfem_bvp. Writes VTK snapshots, errors.csv, quality.csv and
/// manifest.json when output_dir is set.
RunSummary run_ibvp(const RunConfig& cfg, const StepObserver& observer = {});

struct MoveMeshConfig {
  std::string mesh_file;           // text mesh; empty: generated
  std::string domain = "square";   // line, square, cube, disk, lshape, channel
  int n = 20;
  std::string metric = "ring";     // identity, ring, peak
  std::string formulation = "xi";  // xi, x, xm
  std::array<double, 2> tspan = {0.0, 1.0};
  int iterations = 1;
  MmpdeParams mmpde;
  std::string output_dir;
};

struct MoveMeshSummary {
  Mesh before, after;
  QualityReport quality_before, quality_after;
  double kmin = 0.0;
  double energy = 0.0;
  std::vector<std::string> files;
};

Mesh generate_domain(const std::string& domain, int n);

/// Samples the named analytic test function used for metric demos.
std::vector<double> demo_function(const std::string& metric, const RealTable& X);

/// Mesh adaptation demo: mesh, analytic metric, chosen driver, quality
/// report and before/after VTK.
MoveMeshSummary run_movemesh(const MoveMeshConfig& cfg);

/// Flat key = value text with [sections]; '#' starts a comment. Keys are
/// the CLI flag names (section.key, or bare key for [run]).
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});
/// Applies one setting, e.g. ("mmpde", "tau", "1e-2").
void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value);

MetricKind parse_metric_kind(const std::string& s);
MeshIntegrator parse_integrator(const std::string& s);

}  // namespace mmpde
