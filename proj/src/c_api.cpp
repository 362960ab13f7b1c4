// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/mmpde_c.h"

#include <exception>
#include <new>
#include <string>

#include "mmpde/driver.hpp"
#include "mmpde/error.hpp"
#include "mmpde/mesh_io.hpp"
#include "mmpde/parallel.hpp"

struct mmpde_mesh {
  mmpde::Mesh m;
};

struct mmpde_run_config {
  mmpde::RunConfig c;
};

struct mmpde_run_result {
  mmpde::RunSummary s;
};

struct mmpde_movemesh_config {
  mmpde::MoveMeshConfig c;
};

namespace {

thread_local std::string g_error;

template <class F>
mmpde_status guard(F&& f) {
  try {
    f();
    g_error.clear();
    return MMPDE_OK;
  } catch (const mmpde::Error& e) {
    g_error = e.what();
    return static_cast<mmpde_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return MMPDE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_error = e.what();
    return MMPDE_ERR_INTERNAL;
  } catch (...) {
    g_error = "unknown error";
    return MMPDE_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw mmpde::Error(mmpde::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

double to_double(const char* key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  mmpde::require(pos == v.size() && pos > 0, std::string("bad number for ") + key + ": " + v);
  return x;
}

}  // namespace

extern "C" {

const char* mmpde_version(void) { return "0.1.0"; }

const char* mmpde_last_error(void) { return g_error.c_str(); }

const char* mmpde_status_name(mmpde_status s) {
  switch (s) {
    case MMPDE_OK: return "ok";
    case MMPDE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MMPDE_ERR_SINGULAR_MATRIX: return "singular matrix";
    case MMPDE_ERR_NOT_SPD: return "not SPD";
    case MMPDE_ERR_DEGENERATE_ELEMENT: return "degenerate element";
    case MMPDE_ERR_MESH_TANGLED: return "mesh tangled";
    case MMPDE_ERR_CONVERGENCE: return "convergence failure";
    case MMPDE_ERR_STEP_UNDERFLOW: return "step underflow";
    case MMPDE_ERR_NON_FINITE: return "non-finite value";
    case MMPDE_ERR_IO: return "I/O error";
    case MMPDE_ERR_BAD_CALLBACK_SHAPE: return "bad callback shape";
    case MMPDE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void mmpde_set_num_threads(int n) { mmpde::set_num_threads(n); }
int mmpde_num_threads(void) { return mmpde::num_threads(); }

int mmpde_problem_count(void) { return static_cast<int>(mmpde::problem_names().size()); }

const char* mmpde_problem_name(int i) {
  static const std::vector<std::string> names = mmpde::problem_names();
  if (i < 0 || i >= static_cast<int>(names.size())) return nullptr;
  return names[i].c_str();
}

mmpde_status mmpde_mesh_generate(const char* domain, int n, mmpde_mesh** out) {
  return guard([&] {
    need(domain, "domain");
    need(out, "out");
    *out = new mmpde_mesh{mmpde::generate_domain(domain, n)};
  });
}

mmpde_status mmpde_mesh_from_arrays(int dim, size_t num_vertices, const double* X, size_t num_elements,
                                    const int32_t* tri, mmpde_mesh** out) {
  return guard([&] {
    need(X, "X");
    need(tri, "tri");
    need(out, "out");
    mmpde::require(dim >= 1 && dim <= 3, "dim must be 1, 2 or 3");
    mmpde::RealTable x(num_vertices, dim, std::vector<double>(X, X + num_vertices * dim));
    mmpde::IndexTable t(num_elements, dim + 1, std::vector<mmpde::Index>(tri, tri + num_elements * (dim + 1)));
    *out = new mmpde_mesh{mmpde::make_mesh(dim, std::move(x), std::move(t))};
  });
}

mmpde_status mmpde_mesh_read(const char* path, mmpde_mesh** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new mmpde_mesh{mmpde::read_mesh_text(path)};
  });
}

mmpde_status mmpde_mesh_write(const mmpde_mesh* m, const char* path) {
  return guard([&] {
    need(m, "mesh");
    need(path, "path");
    mmpde::write_mesh_text(path, m->m);
  });
}

mmpde_status mmpde_mesh_write_vtk(const mmpde_mesh* m, const char* path) {
  return guard([&] {
    need(m, "mesh");
    need(path, "path");
    mmpde::write_vtk(path, m->m, {});
  });
}

mmpde_status mmpde_mesh_refine(const mmpde_mesh* m, int level, mmpde_mesh** out) {
  return guard([&] {
    need(m, "mesh");
    need(out, "out");
    *out = new mmpde_mesh{mmpde::uniform_refine(m->m, level).fine};
  });
}

mmpde_status mmpde_mesh_merge(const mmpde_mesh* a, const mmpde_mesh* b, mmpde_mesh** out) {
  return guard([&] {
    need(a, "mesh a");
    need(b, "mesh b");
    need(out, "out");
    *out = new mmpde_mesh{mmpde::mesh_merge(a->m, b->m)};
  });
}

mmpde_status mmpde_mesh_get_info(const mmpde_mesh* m, mmpde_mesh_info* info) {
  return guard([&] {
    need(m, "mesh");
    need(info, "info");
    info->dim = m->m.dim;
    info->num_vertices = m->m.num_vertices();
    info->num_elements = m->m.num_elements();
    info->num_boundary_facets = m->m.num_boundary_facets();
    info->volume = mmpde::total_volume(m->m);
    info->min_volume = mmpde::min_signed_volume(m->m.X, m->m.tri);
  });
}

const double* mmpde_mesh_vertices(const mmpde_mesh* m) { return m ? m->m.X.data().data() : nullptr; }
const int32_t* mmpde_mesh_elements(const mmpde_mesh* m) { return m ? m->m.tri.data().data() : nullptr; }
void mmpde_mesh_free(mmpde_mesh* m) { delete m; }

mmpde_status mmpde_config_new(const char* problem, mmpde_run_config** out) {
  return guard([&] {
    need(out, "out");
    auto* c = new mmpde_run_config{};
    if (problem) c->c.problem = problem;
    *out = c;
  });
}

mmpde_status mmpde_config_load(mmpde_run_config* c, const char* path) {
  return guard([&] {
    need(c, "config");
    need(path, "path");
    c->c = mmpde::load_run_config(path, c->c);
  });
}

mmpde_status mmpde_config_set(mmpde_run_config* c, const char* section, const char* key, const char* value) {
  return guard([&] {
    need(c, "config");
    need(key, "key");
    need(value, "value");
    mmpde::apply_setting(c->c, section ? section : "", key, value);
  });
}

void mmpde_config_free(mmpde_run_config* c) { delete c; }

mmpde_status mmpde_run(const mmpde_run_config* c, mmpde_run_result** out) {
  return guard([&] {
    need(c, "config");
    need(out, "out");
    *out = new mmpde_run_result{mmpde::run_ibvp(c->c)};
  });
}

mmpde_status mmpde_result_summary(const mmpde_run_result* r, mmpde_run_summary* s) {
  return guard([&] {
    need(r, "result");
    need(s, "summary");
    s->t_final = r->s.t_final;
    s->steps = r->s.steps;
    s->shortened_steps = r->s.shortened_steps;
    s->l2 = r->s.l2;
    s->linf = r->s.linf;
    s->qeq_max = r->s.qeq_max;
    s->kmin_min = r->s.min_kmin;
    s->num_vertices = r->s.U.rows();
    s->npde = r->s.U.cols();
  });
}

const double* mmpde_result_solution(const mmpde_run_result* r) { return r ? r->s.U.data().data() : nullptr; }

mmpde_status mmpde_result_mesh(const mmpde_run_result* r, mmpde_mesh** out) {
  return guard([&] {
    need(r, "result");
    need(out, "out");
    *out = new mmpde_mesh{r->s.mesh};
  });
}

size_t mmpde_result_file_count(const mmpde_run_result* r) { return r ? r->s.files.size() : 0; }

const char* mmpde_result_file(const mmpde_run_result* r, size_t i) {
  if (!r || i >= r->s.files.size()) return nullptr;
  return r->s.files[i].c_str();
}

void mmpde_result_free(mmpde_run_result* r) { delete r; }

mmpde_status mmpde_movemesh_config_new(mmpde_movemesh_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new mmpde_movemesh_config{};
  });
}

mmpde_status mmpde_movemesh_config_set(mmpde_movemesh_config* c, const char* key, const char* value) {
  return guard([&] {
    need(c, "config");
    need(key, "key");
    need(value, "value");
    const std::string k = key, v = value;
    auto& cfg = c->c;
    if (k == "mesh") cfg.mesh_file = v;
    else if (k == "domain") cfg.domain = v;
    else if (k == "n") cfg.n = static_cast<int>(to_double(key, v));
    else if (k == "metric") cfg.metric = v;
    else if (k == "formulation") cfg.formulation = v;
    else if (k == "t0") cfg.tspan[0] = to_double(key, v);
    else if (k == "t1") cfg.tspan[1] = to_double(key, v);
    else if (k == "iterations") cfg.iterations = static_cast<int>(to_double(key, v));
    else if (k == "tau") cfg.mmpde.tau = to_double(key, v);
    else if (k == "theta") cfg.mmpde.theta = to_double(key, v);
    else if (k == "p") cfg.mmpde.p = to_double(key, v);
    else if (k == "integrator") cfg.mmpde.integrator = mmpde::parse_integrator(v);
    else if (k == "dt0") cfg.mmpde.dt0 = to_double(key, v);
    else if (k == "abstol") cfg.mmpde.abstol = to_double(key, v);
    else if (k == "reltol") cfg.mmpde.reltol = to_double(key, v);
    else if (k == "output") cfg.output_dir = v;
    else throw mmpde::Error(mmpde::ErrorCode::InvalidArgument, "unknown setting: " + k);
  });
}

void mmpde_movemesh_config_free(mmpde_movemesh_config* c) { delete c; }

mmpde_status mmpde_movemesh(const mmpde_movemesh_config* c, mmpde_movemesh_summary* s, mmpde_mesh** out_mesh) {
  return guard([&] {
    need(c, "config");
    need(s, "summary");
    mmpde::MoveMeshSummary r = mmpde::run_movemesh(c->c);
    s->qgeo_before = r.quality_before.qgeo;
    s->qeq_before = r.quality_before.qeq;
    s->qali_before = r.quality_before.qali;
    s->qgeo_after = r.quality_after.qgeo;
    s->qeq_after = r.quality_after.qeq;
    s->qali_after = r.quality_after.qali;
    s->kmin = r.kmin;
    s->energy = r.energy;
    if (out_mesh) *out_mesh = new mmpde_mesh{std::move(r.after)};
  });
}

}  // extern "C"
