// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "doctest.h"
#include "mmpde/driver.hpp"
#include "mmpde/error.hpp"
#include "mmpde/mesh_io.hpp"

using namespace mmpde;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mmpde_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config text with sections, comments and dotted keys") {
  const RunConfig c = parse_run_config(R"(
# a run
problem = heat2d
n = 12
fixed-mesh = true
[mmpde]
tau = 0.05     # relaxation
integrator = explicit
dt0 = 1e-5
[fem]
reltol = 1e-5
direct_ls = false
[adapt]
metric = iso
ceiling = 100
[output]
dir = /tmp/x
interval = 0.1
)");
  CHECK(c.problem == "heat2d");
  CHECK(c.n == 12);
  CHECK_FALSE(c.moving);
  CHECK(c.mmpde.tau == 0.05);
  CHECK(c.mmpde.integrator == MeshIntegrator::Explicit);
  CHECK(*c.mmpde.dt0 == 1e-5);
  CHECK(c.fem.reltol == 1e-5);
  CHECK_FALSE(c.fem.direct_ls);
  CHECK(c.adapt.kind == MetricKind::Iso);
  CHECK(c.adapt.ceiling == 100);
  CHECK(c.output_dir == "/tmp/x");
  CHECK(c.output_interval == 0.1);

  const RunConfig d = parse_run_config("mmpde.tau = 0.2\nadapt.order = 0\n", c);
  CHECK(d.mmpde.tau == 0.2);
  CHECK(d.adapt.order == 0);
  CHECK(d.n == 12);

  RunConfig e = d;
  apply_setting(e, "run", "n", "30");
  CHECK(e.n == 30);

  CHECK_THROWS_AS(parse_run_config("[mmpde]\nbogus = 1\n"), Error);
  CHECK_THROWS_AS(parse_run_config("n = 3x\n"), Error);
  CHECK_THROWS_AS(parse_run_config("[nowhere]\nn = 3\n"), Error);
  CHECK_THROWS_AS(parse_run_config("just text\n"), Error);
  RunConfig bad;
  bad.problem = "unknown";
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = RunConfig{};
  bad.fem.reltol = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("solution metric is SPD and capped") {
  const auto g = linspace(0, 1, 12);
  const Mesh m = rect2tri(g, g, 2);
  RealTable U(m.num_vertices(), 2);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    U(v, 0) = std::tanh(40 * (m.X(v, 0) - 0.5));
    U(v, 1) = m.X(v, 1) * m.X(v, 1);
  }
  for (MetricKind k : {MetricKind::Hessian, MetricKind::Iso, MetricKind::Arclength}) {
    AdaptOptions a;
    a.kind = k;
    a.ceiling = 50;
    const MetricField M = solution_metric(U, m, a);
    CHECK_NOTHROW(check_spd(M, "test"));
    for (std::size_t v = 0; v < M.size(); ++v) {
      const SymEig e = sym_eig(M.get(v));
      CHECK(e.lambda[1] <= 50 * (1 + 1e-12));
    }
  }
}

TEST_CASE("Burgers run writes reproducible artifacts") {
  const fs::path dir = scratch("burgers");
  RunConfig c;
  c.problem = "burgers1d";
  c.n = 40;
  c.t_end = 0.1;
  c.output_interval = 0.05;
  c.output_dir = dir.string();
  const RunSummary s = run_ibvp(c);
  CHECK(s.t_final == 0.1);
  CHECK(s.steps > 0);
  CHECK(s.linf > 0);
  CHECK(s.linf < 0.05);
  CHECK(s.min_kmin > 0);

  const std::string errors = slurp(dir / "errors.csv");
  CHECK(errors.rfind("t,l2,linf\n", 0) == 0);
  CHECK(std::count(errors.begin(), errors.end(), '\n') == 4);
  CHECK(slurp(dir / "quality.csv").rfind("t,qeq,qali,kmin\n", 0) == 0);

  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["problem"] == "burgers1d");
  CHECK(j["vertices"] == 41);
  CHECK(j["files"].size() == 5);

  const VtkData vtk = read_vtk((dir / "solution_0002.vtk").string());
  REQUIRE(vtk.fields.size() == 1);
  CHECK(vtk.mesh.num_vertices() == 41);
  for (std::size_t v = 0; v < 41; ++v) {
    CHECK(vtk.mesh.X(v, 0) == doctest::Approx(s.mesh.X(v, 0)).epsilon(1e-12));
    CHECK(vtk.fields[0].values(v, 0) == doctest::Approx(s.U(v, 0)).epsilon(1e-12));
  }

  const fs::path dir2 = scratch("burgers2");
  c.output_dir = dir2.string();
  run_ibvp(c);
  CHECK(slurp(dir / "errors.csv") == slurp(dir2 / "errors.csv"));
  CHECK(slurp(dir / "quality.csv") == slurp(dir2 / "quality.csv"));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("moving mesh beats the fixed mesh on a short Burgers run") {
  RunConfig c;
  c.problem = "burgers1d";
  c.n = 40;
  c.t_end = 0.2;
  const RunSummary moving = run_ibvp(c);
  c.moving = false;
  const RunSummary fixed = run_ibvp(c);
  CHECK(moving.linf < fixed.linf);
  for (std::size_t v = 0; v < fixed.mesh.num_vertices(); ++v) CHECK(fixed.mesh.X(v, 0) == doctest::Approx(v / 40.0));
}

TEST_CASE("steady path solves once and reports errors") {
  RunConfig c;
  c.problem = "poisson3d";
  c.n = 4;
  c.moving = false;
  int calls = 0;
  const RunSummary s = run_ibvp(c, [&](double, const Mesh&, const RealTable&) { ++calls; });
  CHECK(calls == 1);
  CHECK(s.steps >= 1);
  CHECK(s.l2 > 0);
  CHECK(s.l2 < 0.5);
}

TEST_CASE("movemesh with the identity metric leaves the mesh in place") {
  MoveMeshConfig c;
  c.domain = "square";
  c.n = 8;
  c.metric = "identity";
  const MoveMeshSummary s = run_movemesh(c);
  double d = 0;
  for (std::size_t i = 0; i < s.before.X.size(); ++i) d = std::max(d, std::abs(s.before.X.data()[i] - s.after.X.data()[i]));
  CHECK(d < 1e-8);
  CHECK(s.quality_after.qeq == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("movemesh on a ring metric improves equidistribution") {
  const fs::path dir = scratch("ring");
  MoveMeshConfig c;
  c.domain = "square";
  c.n = 16;
  c.metric = "ring";
  c.output_dir = dir.string();
  const MoveMeshSummary s = run_movemesh(c);
  CHECK(s.quality_after.qeq < s.quality_before.qeq);
  CHECK(s.kmin > 0);
  CHECK(fs::exists(dir / "before.vtk"));
  CHECK(read_vtk((dir / "after.vtk").string()).mesh.num_elements() == s.after.num_elements());
  fs::remove_all(dir);
}

TEST_CASE("movemesh on imported L-shaped and disk meshes") {
  const fs::path dir = scratch("import");
  fs::create_directories(dir);
  for (const char* domain : {"lshape", "disk"}) {
    CAPTURE(domain);
    const std::string file = (dir / (std::string(domain) + ".mesh")).string();
    write_mesh_text(file, generate_domain(domain, domain == std::string("disk") ? 6 : 12));
    MoveMeshConfig c;
    c.mesh_file = file;
    c.metric = "ring";
    c.mmpde.tau = 1e-2;
    c.mmpde.dt0 = 1e-3;
    const MoveMeshSummary s = run_movemesh(c);
    CHECK(s.kmin > 0);
    CHECK(min_signed_volume(s.after.X, s.after.tri) > 0);
  }
  fs::remove_all(dir);
}

TEST_CASE("tangling diagnostics name the dt0 remedy") {
  try {
    throw MeshTangledError("moved mesh has an inverted element");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MeshTangled);
    CHECK(std::string(e.what()).find("dt0") != std::string::npos);
  }
}
