// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mmpde/error.hpp"
#include "mmpde/mesh_io.hpp"
#include "mmpde/quality.hpp"

namespace mmpde {

namespace {

std::vector<double> column(const RealTable& U, std::size_t c) {
  std::vector<double> u(U.rows());
  for (std::size_t v = 0; v < U.rows(); ++v) u[v] = U(v, c);
  return u;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<NamedField> solution_fields(const RealTable& U) {
  std::vector<NamedField> f;
  if (U.cols() == 1) {
    f.push_back({"u", U});
    return f;
  }
  for (std::size_t c = 0; c < U.cols(); ++c) {
    RealTable col(U.rows(), 1, column(U, c));
    f.push_back({"u" + std::to_string(c), std::move(col)});
  }
  return f;
}

const char* kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::Hessian: return "hessian";
    case MetricKind::Iso: return "iso";
    case MetricKind::Arclength: return "arclength";
  }
  return "?";
}

// Output bookkeeping for run_ibvp.
class RunWriter {
 public:
  RunWriter(const RunConfig& cfg, const BenchmarkProblem& prob) : cfg_(cfg), prob_(prob) {
    if (cfg.output_dir.empty()) return;
    std::filesystem::create_directories(cfg.output_dir);
    errors_.open(path("errors.csv"));
    quality_.open(path("quality.csv"));
    if (!errors_ || !quality_) throw Error(ErrorCode::Io, "cannot write to " + cfg.output_dir);
    errors_ << "t,l2,linf\n";
    quality_ << "t,qeq,qali,kmin\n";
  }

  bool active() const { return !cfg_.output_dir.empty(); }

  void record(double t, const Mesh& m, const RealTable& U, const RealTable& xi_ref, RunSummary& s) {
    const MetricField M = solution_metric(U, m, cfg_.adapt);
    const QualityReport q = quality_measures(m, M, true, &xi_ref);
    const double kmin = min_signed_volume(m.X, m.tri);
    s.qeq_max = std::max(s.qeq_max, q.qeq);
    s.min_kmin = std::min(s.min_kmin, kmin);
    if (!active()) return;
    if (prob_.uexact)
      errors_ << fmt(t) << ',' << fmt(error_p1_l2(prob_.uexact, t, m, U)) << ','
              << fmt(error_p1_linf(prob_.uexact, t, m, U)) << '\n';
    quality_ << fmt(t) << ',' << fmt(q.qeq) << ',' << fmt(q.qali) << ',' << fmt(kmin) << '\n';
    if (cfg_.write_vtk) {
      char name[32];
      std::snprintf(name, sizeof name, "solution_%04d.vtk", frame_++);
      write_vtk(path(name), m, solution_fields(U));
      s.files.push_back(path(name));
    }
  }

  void finish(const RunSummary& s, double seconds) {
    if (!active()) return;
    errors_.close();
    quality_.close();
    nlohmann::json j;
    j["problem"] = s.problem;
    j["n"] = cfg_.n;
    j["moving"] = cfg_.moving;
    j["t_final"] = s.t_final;
    j["steps"] = s.steps;
    j["shortened_steps"] = s.shortened_steps;
    j["vertices"] = s.mesh.num_vertices();
    j["elements"] = s.mesh.num_elements();
    if (s.l2 >= 0) {
      j["l2"] = s.l2;
      j["linf"] = s.linf;
    }
    j["qeq_max"] = s.qeq_max;
    j["kmin_min"] = s.min_kmin;
    j["mmpde"] = {{"tau", cfg_.mmpde.tau},
                  {"integrator", cfg_.mmpde.integrator == MeshIntegrator::Stiff ? "stiff" : "explicit"},
                  {"abstol", cfg_.mmpde.abstol_or_default()}};
    if (cfg_.mmpde.dt0) j["mmpde"]["dt0"] = *cfg_.mmpde.dt0;
    j["fem"] = {{"reltol", cfg_.fem.reltol},
                {"abstol", cfg_.fem.abstol},
                {"fixed_step", cfg_.fem.fixed_step},
                {"direct_ls", cfg_.fem.direct_ls}};
    j["adapt"] = {{"metric", kind_name(cfg_.adapt.kind)},
                  {"alpha", cfg_.adapt.alpha},
                  {"order", cfg_.adapt.order},
                  {"smoothing", cfg_.adapt.smoothing},
                  {"ceiling", cfg_.adapt.ceiling}};
    std::vector<std::string> files = {"errors.csv", "quality.csv"};
    for (const auto& f : s.files) files.push_back(std::filesystem::path(f).filename().string());
    j["files"] = files;
    j["wall_seconds"] = seconds;
    std::ofstream out(path("manifest.json"));
    out << j.dump(2) << '\n';
  }

  std::string path(const std::string& name) const {
    return (std::filesystem::path(cfg_.output_dir) / name).string();
  }

 private:
  const RunConfig& cfg_;
  const BenchmarkProblem& prob_;
  std::ofstream errors_, quality_;
  int frame_ = 0;
};

RealTable move_to(const Mesh& m, const RealTable& xi_ref, const MetricField& M, std::array<double, 2> span,
                  const MmpdeParams& prm, std::span<const Index> fixed) {
  MoveResult r = move_xi(span, xi_ref, m, M, prm, fixed);
  if (!(r.Kmin > 0)) throw MeshTangledError("moved mesh has an inverted element");
  return std::move(r.Xnew);
}

}  // namespace

void RunConfig::validate() const {
  const auto names = problem_names();
  require(std::find(names.begin(), names.end(), problem) != names.end(), "unknown problem: " + problem);
  require(n >= 0, "n must be nonnegative");
  require(dt > 0, "dt must be positive");
  require(dt_max >= 0, "dt_max must be nonnegative");
  require(init_iterations >= 0, "init_iterations must be nonnegative");
  require(max_steps > 0, "max_steps must be positive");
  require(fem.reltol > 0 && fem.abstol > 0, "FEM tolerances must be positive");
  require(bvp.tol > 0 && bvp.max_iter > 0, "BVP tolerance and iteration count must be positive");
  require(adapt.order == 0 || adapt.order == 1, "metric order must be 0 or 1");
  require(adapt.smoothing >= 0, "smoothing cycles must be nonnegative");
  require(adapt.ceiling > 0, "eigenvalue ceiling must be positive");
  require(output_interval >= 0, "output interval must be nonnegative");
  mmpde.validate();
}

MetricField solution_metric(const RealTable& U, const Mesh& m, const AdaptOptions& opt) {
  MetricField M;
  if (opt.kind == MetricKind::Arclength) {
    M = metric_arclength(U, m);
  } else {
    for (std::size_t c = 0; c < U.cols(); ++c) {
      const GradHessian gh = grad_hessian_recovery(column(U, c), m);
      const double alpha = opt.alpha > 0 ? opt.alpha : default_alpha(gh.hessian, m, opt.order);
      MetricField Mc = metric_from_hessian(gh.hessian, alpha, opt.order, opt.kind == MetricKind::Iso);
      M = c == 0 ? std::move(Mc) : metric_intersection(M, Mc);
    }
  }
  if (opt.smoothing > 0) M = metric_smoothing(M, opt.smoothing, m);
  return eig_ceiling(M, opt.ceiling);
}

RunSummary run_ibvp(const RunConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  const auto wall0 = std::chrono::steady_clock::now();
  const BenchmarkProblem prob = make_problem(cfg.problem);
  const int n = cfg.n > 0 ? cfg.n : prob.default_n;

  RunSummary s;
  s.problem = prob.name;
  s.min_kmin = std::numeric_limits<double>::infinity();
  Mesh mesh = prob.make_mesh(n);
  const std::vector<Index> corners = find_corners(mesh);
  const PdeDefinition pde = prob.make_pde(mesh);
  pde.validate(mesh);
  const RealTable xi_ref = mesh.X;
  const double t0 = prob.t_begin;
  const double tend = prob.steady ? t0 : (cfg.t_end >= 0 ? cfg.t_end : prob.t_end);
  require(tend >= t0, "t_end precedes the start time");

  RealTable U = prob.initial(mesh.X);
  RunWriter out(cfg, prob);

  if (prob.steady) {
    BvpResult r = movfem_bvp(U, mesh, pde, cfg.bvp);
    for (int it = 0; cfg.moving && it < cfg.init_iterations; ++it) {
      const MetricField M = solution_metric(r.U, mesh, cfg.adapt);
      Mesh moved = mesh;
      moved.X = move_to(mesh, xi_ref, M, {0.0, 1.0}, cfg.mmpde, corners);
      const RealTable guess = lin_interp(r.U, mesh, moved.X);
      mesh = std::move(moved);
      r = movfem_bvp(guess, mesh, pde, cfg.bvp);
    }
    U = std::move(r.U);
    s.steps = r.iterations;
    out.record(t0, mesh, U, xi_ref, s);
    if (observer) observer(t0, mesh, U);
  } else {
    // Adjusted initial mesh: equilibrate on the initial data, resampled each round.
    for (int it = 0; cfg.moving && it < cfg.init_iterations; ++it) {
      const MetricField M = solution_metric(U, mesh, cfg.adapt);
      mesh.X = move_to(mesh, xi_ref, M, {0.0, 1.0}, cfg.mmpde, corners);
      U = prob.initial(mesh.X);
    }
    U = project_dirichlet(U, mesh, pde, t0);

    const double span = tend - t0;
    const double dt_max = cfg.dt_max > 0 ? cfg.dt_max : span / 50.0;
    const double eps_t = 1e-12 * std::max(1.0, std::abs(tend));
    double next_out = cfg.output_interval > 0 ? t0 + cfg.output_interval : tend;
    double t = t0;
    double dt = std::min(cfg.dt, dt_max);
    StepHistory hist;
    out.record(t, mesh, U, xi_ref, s);
    if (observer) observer(t, mesh, U);

    RealTable Xdot(mesh.num_vertices(), mesh.dim, 0.0);
    while (t < tend - eps_t) {
      require(s.steps < cfg.max_steps, "step limit reached", ErrorCode::ConvergenceFailure);
      dt = std::min(dt, next_out - t);
      if (next_out - t - dt < 1e-3 * dt) dt = next_out - t;

      if (cfg.moving) {
        const MetricField M = solution_metric(U, mesh, cfg.adapt);
        const RealTable Xnew = move_to(mesh, xi_ref, M, {t, t + dt}, cfg.mmpde, corners);
        for (std::size_t i = 0; i < Xdot.size(); ++i) Xdot.data()[i] = (Xnew.data()[i] - mesh.X.data()[i]) / dt;
      }
      StepResult r = movfem_step(t, dt, U, mesh, Xdot, pde, cfg.fem, &hist);
      if (r.dt_used < dt) ++s.shortened_steps;
      if (cfg.moving)
        for (std::size_t i = 0; i < Xdot.size(); ++i) mesh.X.data()[i] += r.dt_used * Xdot.data()[i];
      t = r.dt_used >= next_out - t - eps_t ? next_out : t + r.dt_used;
      U = std::move(r.Unew);
      ++s.steps;
      dt = std::min(r.dt_next, dt_max);
      if (observer) observer(t, mesh, U);

      if (t >= next_out - eps_t) {
        out.record(t, mesh, U, xi_ref, s);
        next_out = std::min(tend, next_out + (cfg.output_interval > 0 ? cfg.output_interval : span));
        if (tend - next_out < eps_t) next_out = tend;
      }
    }
  }

  s.t_final = tend;
  if (prob.uexact) {
    s.l2 = error_p1_l2(prob.uexact, tend, mesh, U);
    s.linf = error_p1_linf(prob.uexact, tend, mesh, U);
  }
  s.mesh = std::move(mesh);
  s.U = std::move(U);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  out.finish(s, secs);
  return s;
}

Mesh generate_domain(const std::string& domain, int n) {
  require(n >= 1, "n must be positive");
  const auto u = linspace(0.0, 1.0, n);
  if (domain == "line") return line_mesh(u);
  if (domain == "square") return rect2tri(u, u, 2);
  if (domain == "cube") return cube2tet(u, u, u);
  if (domain == "disk") return circle2tri(n);
  if (domain == "channel") return combustion_mesh(n);
  if (domain == "lshape") {
    const int h = std::max(1, n / 2);
    const auto a = linspace(0.0, 1.0, 2 * h), b = linspace(0.0, 0.5, h), c = linspace(0.5, 1.0, h);
    return mesh_merge(rect2tri(a, b, 2), rect2tri(b, c, 2));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown domain: " + domain);
}

std::vector<double> demo_function(const std::string& metric, const RealTable& X) {
  const std::size_t nv = X.rows(), d = X.cols();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -lo[0]);
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], X(v, a));
      hi[a] = std::max(hi[a], X(v, a));
    }
  double ext = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < d; ++a) ext = std::min(ext, hi[a] - lo[a]);
  std::vector<double> u(nv, 0.0);
  if (metric == "ring") {
    const double r0 = 0.25 * ext;
    for (std::size_t v = 0; v < nv; ++v) {
      double r2 = 0;
      for (std::size_t a = 0; a < d; ++a) {
        const double z = X(v, a) - 0.5 * (lo[a] + hi[a]);
        r2 += z * z;
      }
      u[v] = std::tanh(30.0 * (r2 - r0 * r0) / (ext * ext));
    }
  } else if (metric == "peak") {
    for (std::size_t v = 0; v < nv; ++v) {
      const double z = (X(v, 0) - 0.5 * (lo[0] + hi[0])) / (hi[0] - lo[0]);
      u[v] = std::tanh(50.0 * z);
    }
  } else if (metric != "identity") {
    throw Error(ErrorCode::InvalidArgument, "unknown metric: " + metric);
  }
  return u;
}

MoveMeshSummary run_movemesh(const MoveMeshConfig& cfg) {
  cfg.mmpde.validate();
  require(cfg.iterations >= 1, "iterations must be positive");
  require(cfg.tspan[1] > cfg.tspan[0], "empty time span");
  MoveMeshSummary s;
  s.before = cfg.mesh_file.empty() ? generate_domain(cfg.domain, cfg.n) : read_mesh_text(cfg.mesh_file);
  const Mesh& m0 = s.before;
  const std::vector<Index> corners = find_corners(m0);
  const RealTable xi_ref = m0.X;

  auto metric_on = [&](const Mesh& m) {
    if (cfg.metric == "identity") return MatBatch::identity(m.dim, m.num_vertices());
    const auto u = demo_function(cfg.metric, m.X);
    AdaptOptions a;
    a.order = 0;
    return solution_metric(RealTable(u.size(), 1, u), m, a);
  };

  Mesh cur = m0;
  MoveResult r;
  for (int it = 0; it < cfg.iterations; ++it) {
    const MetricField M = metric_on(cur);
    if (cfg.formulation == "xi")
      r = move_xi(cfg.tspan, xi_ref, cur, M, cfg.mmpde, corners);
    else if (cfg.formulation == "x")
      r = move_x(cfg.tspan, cur, cfg.mmpde, corners, &xi_ref);
    else if (cfg.formulation == "xm")
      r = move_x_metric(cfg.tspan, cur, M, cfg.mmpde, corners, &xi_ref);
    else
      throw Error(ErrorCode::InvalidArgument, "unknown formulation: " + cfg.formulation);
    if (!(r.Kmin > 0)) throw MeshTangledError("moved mesh has an inverted element");
    cur.X = r.Xnew;
  }
  s.after = cur;
  s.kmin = r.Kmin;
  s.energy = r.Ih;
  s.quality_before = quality_measures(m0, metric_on(m0), true, &xi_ref);
  s.quality_after = quality_measures(cur, metric_on(cur), true, &xi_ref);

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    const auto dir = std::filesystem::path(cfg.output_dir);
    auto field = [&](const Mesh& m) {
      const auto u = demo_function(cfg.metric, m.X);
      return std::vector<NamedField>{{"u", RealTable(u.size(), 1, u)}};
    };
    write_vtk((dir / "before.vtk").string(), m0, field(m0));
    write_vtk((dir / "after.vtk").string(), cur, field(cur));
    std::ofstream q(dir / "quality.csv");
    q << "mesh,qgeo,qeq,qali,kmin\n";
    q << "before," << fmt(s.quality_before.qgeo) << ',' << fmt(s.quality_before.qeq) << ','
      << fmt(s.quality_before.qali) << ',' << fmt(min_signed_volume(m0.X, m0.tri)) << '\n';
    q << "after," << fmt(s.quality_after.qgeo) << ',' << fmt(s.quality_after.qeq) << ','
      << fmt(s.quality_after.qali) << ',' << fmt(s.kmin) << '\n';
    for (const char* f : {"before.vtk", "after.vtk", "quality.csv"}) s.files.push_back((dir / f).string());
  }
  return s;
}

}  // namespace mmpde
