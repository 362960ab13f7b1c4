// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

// mmpde command-line driver.

#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "mmpde/mmpde_c.h"

namespace {

struct Setting {
  const char* flag;
  const char* section;
  const char* key;
  const char* help;
};

// Valued run flags; each maps onto one config key.
const Setting kRunSettings[] = {
    {"--n", "run", "n", "mesh resolution (cells per unit length)"},
    {"--tend", "run", "t_end", "final time"},
    {"--dt", "run", "dt", "first time step"},
    {"--dt-max", "run", "dt_max", "largest time step"},
    {"--init-iterations", "run", "init_iterations", "initial mesh adjustment rounds"},
    {"--max-steps", "run", "max_steps", "step limit"},
    {"--tau", "mmpde", "tau", "mesh relaxation time"},
    {"--theta", "mmpde", "theta", "functional weight theta"},
    {"--integrator", "mmpde", "integrator", "mesh ODE integrator: stiff or explicit"},
    {"--dt0", "mmpde", "dt0", "initial step of the mesh integrator"},
    {"--mesh-abstol", "mmpde", "abstol", "absolute tolerance of the mesh integrator"},
    {"--mesh-reltol", "mmpde", "reltol", "relative tolerance of the mesh integrator"},
    {"--reltol", "fem", "reltol", "FEM relative tolerance"},
    {"--abstol", "fem", "abstol", "FEM absolute tolerance"},
    {"--bvp-tol", "fem", "bvp_tol", "steady solve residual tolerance"},
    {"--bvp-max-iter", "fem", "bvp_max_iter", "steady solve iteration limit"},
    {"--metric", "adapt", "metric", "hessian, iso or arclength"},
    {"--alpha", "adapt", "alpha", "metric intensity (0: automatic)"},
    {"--order", "adapt", "order", "error norm of the Hessian metric: 0 (L2) or 1 (H1)"},
    {"--smoothing", "adapt", "smoothing", "metric smoothing cycles"},
    {"--ceiling", "adapt", "ceiling", "metric eigenvalue ceiling"},
    {"--output,-o", "output", "dir", "output directory"},
    {"--interval", "output", "interval", "output interval (0: first and last state)"},
};

struct Switch {
  const char* flag;
  const char* section;
  const char* key;
  const char* value;
  const char* help;
};

const Switch kRunSwitches[] = {
    {"--fixed-mesh", "run", "moving", "false", "solve on the fixed initial mesh"},
    {"--fixed-step", "fem", "fixed_step", "true", "no FEM step-size control"},
    {"--iterative-ls", "fem", "direct_ls", "false", "BiCGSTAB with ILU instead of sparse LU"},
    {"--no-vtk", "output", "vtk", "false", "skip VTK snapshots"},
};

int fail(mmpde_status s) {
  std::fprintf(stderr, "error (%s): %s\n", mmpde_status_name(s), mmpde_last_error());
  return static_cast<int>(s);
}

void print_mesh_info(const mmpde_mesh* m) {
  mmpde_mesh_info info;
  if (mmpde_mesh_get_info(m, &info) != MMPDE_OK) return;
  std::printf("dim %d\nvertices %zu\nelements %zu\nboundary_facets %zu\nvolume %.12g\nmin_element_volume %.6g\n",
              info.dim, info.num_vertices, info.num_elements, info.num_boundary_facets, info.volume,
              info.min_volume);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving mesh finite elements: benchmark runs, mesh adaptation and mesh tools"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: MMPDE_NUM_THREADS or all cores)");

  // run
  auto* run = app.add_subcommand("run", "solve a benchmark problem");
  std::string problem, config_file;
  run->add_option("problem", problem, "burgers1d, heat2d, combustion2d or poisson3d")->required();
  run->add_option("--config,-c", config_file, "key = value settings file; flags override it");
  std::vector<std::string> values(std::size(kRunSettings));
  std::vector<CLI::Option*> opts;
  for (std::size_t i = 0; i < std::size(kRunSettings); ++i)
    opts.push_back(run->add_option(kRunSettings[i].flag, values[i], kRunSettings[i].help));
  std::vector<CLI::Option*> switches;
  for (const auto& s : kRunSwitches) switches.push_back(run->add_flag(s.flag, s.help));

  // movemesh
  auto* mv = app.add_subcommand("movemesh", "adapt a mesh to an analytic metric");
  std::map<std::string, std::string> mv_values;
  const std::vector<std::pair<std::string, std::string>> mv_keys = {
      {"mesh", "mesh file to adapt (default: generated domain)"},
      {"domain", "line, square, cube, disk, lshape or channel"},
      {"n", "domain resolution"},
      {"metric", "identity, ring or peak"},
      {"formulation", "xi, x or xm (x with metric)"},
      {"t0", "start of the time span"},
      {"t1", "end of the time span"},
      {"iterations", "repeat the adaptation with a re-evaluated metric"},
      {"tau", "mesh relaxation time"},
      {"theta", "functional weight theta"},
      {"integrator", "stiff or explicit"},
      {"dt0", "initial step"},
      {"abstol", "absolute tolerance"},
      {"reltol", "relative tolerance"},
      {"output", "output directory"}};
  std::vector<CLI::Option*> mv_opts;
  for (const auto& [k, h] : mv_keys) {
    const std::string flag = k == "output" ? "--output,-o" : "--" + k;
    mv_opts.push_back(mv->add_option(flag, mv_values[k], h));
  }

  // mesh tools
  auto* mesh = app.add_subcommand("mesh", "mesh generation and utilities");
  mesh->require_subcommand(1);
  std::string domain = "square", out_file, vtk_file, in_a, in_b;
  int n = 10, level = 1;
  auto* gen = mesh->add_subcommand("gen", "generate a mesh");
  gen->add_option("--domain", domain, "line, square, cube, disk, lshape or channel");
  gen->add_option("--n", n, "resolution");
  gen->add_option("--output,-o", out_file, "mesh text file")->required();
  gen->add_option("--vtk", vtk_file, "also write a VTK file");
  auto* refine = mesh->add_subcommand("refine", "uniform refinement");
  refine->add_option("input", in_a, "mesh file")->required();
  refine->add_option("--level", level, "refinement levels");
  refine->add_option("--output,-o", out_file, "mesh text file")->required();
  auto* merge = mesh->add_subcommand("merge", "merge two meshes");
  merge->add_option("a", in_a, "first mesh file")->required();
  merge->add_option("b", in_b, "second mesh file")->required();
  merge->add_option("--output,-o", out_file, "mesh text file")->required();
  auto* info = mesh->add_subcommand("info", "print mesh statistics");
  info->add_option("input", in_a, "mesh file")->required();

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) mmpde_set_num_threads(threads);

  if (run->parsed()) {
    mmpde_run_config* cfg = nullptr;
    mmpde_status s = mmpde_config_new(problem.c_str(), &cfg);
    if (s != MMPDE_OK) return fail(s);
    if (!config_file.empty() && (s = mmpde_config_load(cfg, config_file.c_str())) != MMPDE_OK) {
      mmpde_config_free(cfg);
      return fail(s);
    }
    // the positional problem wins over the file
    mmpde_config_set(cfg, "run", "problem", problem.c_str());
    for (std::size_t i = 0; i < opts.size() && s == MMPDE_OK; ++i)
      if (opts[i]->count() > 0) s = mmpde_config_set(cfg, kRunSettings[i].section, kRunSettings[i].key, values[i].c_str());
    for (std::size_t i = 0; i < switches.size() && s == MMPDE_OK; ++i)
      if (switches[i]->count() > 0) s = mmpde_config_set(cfg, kRunSwitches[i].section, kRunSwitches[i].key, kRunSwitches[i].value);
    mmpde_run_result* res = nullptr;
    if (s == MMPDE_OK) s = mmpde_run(cfg, &res);
    mmpde_config_free(cfg);
    if (s != MMPDE_OK) return fail(s);
    mmpde_run_summary sum;
    mmpde_result_summary(res, &sum);
    std::printf("problem %s\nt_final %.6g\nsteps %d\nvertices %zu\n", problem.c_str(), sum.t_final, sum.steps,
                sum.num_vertices);
    if (sum.l2 >= 0) std::printf("l2_error %.6e\nlinf_error %.6e\n", sum.l2, sum.linf);
    std::printf("qeq_max %.6g\nkmin %.6g\n", sum.qeq_max, sum.kmin_min);
    for (std::size_t i = 0; i < mmpde_result_file_count(res); ++i) std::printf("wrote %s\n", mmpde_result_file(res, i));
    mmpde_result_free(res);
    return 0;
  }

  if (mv->parsed()) {
    mmpde_movemesh_config* cfg = nullptr;
    mmpde_status s = mmpde_movemesh_config_new(&cfg);
    if (s != MMPDE_OK) return fail(s);
    for (std::size_t i = 0; i < mv_keys.size() && s == MMPDE_OK; ++i)
      if (mv_opts[i]->count() > 0) {
        const auto& k = mv_keys[i].first;
        s = mmpde_movemesh_config_set(cfg, k.c_str(), mv_values[k].c_str());
      }
    mmpde_movemesh_summary sum;
    if (s == MMPDE_OK) s = mmpde_movemesh(cfg, &sum, nullptr);
    mmpde_movemesh_config_free(cfg);
    if (s != MMPDE_OK) return fail(s);
    std::printf("          qgeo       qeq        qali\n");
    std::printf("before    %-10.4f %-10.4f %-10.4f\n", sum.qgeo_before, sum.qeq_before, sum.qali_before);
    std::printf("after     %-10.4f %-10.4f %-10.4f\n", sum.qgeo_after, sum.qeq_after, sum.qali_after);
    std::printf("kmin %.6g\nenergy %.6g\n", sum.kmin, sum.energy);
    return 0;
  }

  mmpde_mesh* m = nullptr;
  mmpde_status s = MMPDE_OK;
  if (gen->parsed()) {
    s = mmpde_mesh_generate(domain.c_str(), n, &m);
  } else if (refine->parsed()) {
    mmpde_mesh* a = nullptr;
    s = mmpde_mesh_read(in_a.c_str(), &a);
    if (s == MMPDE_OK) s = mmpde_mesh_refine(a, level, &m);
    mmpde_mesh_free(a);
  } else if (merge->parsed()) {
    mmpde_mesh *a = nullptr, *b = nullptr;
    s = mmpde_mesh_read(in_a.c_str(), &a);
    if (s == MMPDE_OK) s = mmpde_mesh_read(in_b.c_str(), &b);
    if (s == MMPDE_OK) s = mmpde_mesh_merge(a, b, &m);
    mmpde_mesh_free(a);
    mmpde_mesh_free(b);
  } else if (info->parsed()) {
    s = mmpde_mesh_read(in_a.c_str(), &m);
    if (s == MMPDE_OK) print_mesh_info(m);
    mmpde_mesh_free(m);
    return s == MMPDE_OK ? 0 : fail(s);
  }
  if (s == MMPDE_OK && !out_file.empty()) s = mmpde_mesh_write(m, out_file.c_str());
  if (s == MMPDE_OK && !vtk_file.empty()) s = mmpde_mesh_write_vtk(m, vtk_file.c_str());
  if (s == MMPDE_OK) print_mesh_info(m);
  mmpde_mesh_free(m);
  return s == MMPDE_OK ? 0 : fail(s);
}
