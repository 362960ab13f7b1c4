/* Copyright 2026 The mmpde Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to mmpde. Objects are opaque handles released with the
 * matching _free function. Every call returning mmpde_status reports
 * failures through the status code; mmpde_last_error() then holds a
 * message for the calling thread.
 */
#ifndef MMPDE_C_H
#define MMPDE_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(MMPDE_C_BUILDING)
#define MMPDE_C_API __attribute__((visibility("default")))
#else
#define MMPDE_C_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  MMPDE_OK = 0,
  MMPDE_ERR_INVALID_ARGUMENT = 1,
  MMPDE_ERR_SINGULAR_MATRIX = 2,
  MMPDE_ERR_NOT_SPD = 3,
  MMPDE_ERR_DEGENERATE_ELEMENT = 4,
  MMPDE_ERR_MESH_TANGLED = 5,
  MMPDE_ERR_CONVERGENCE = 6,
  MMPDE_ERR_STEP_UNDERFLOW = 7,
  MMPDE_ERR_NON_FINITE = 8,
  MMPDE_ERR_IO = 9,
  MMPDE_ERR_BAD_CALLBACK_SHAPE = 10,
  MMPDE_ERR_INTERNAL = 99
} mmpde_status;

typedef struct mmpde_mesh mmpde_mesh;
typedef struct mmpde_run_config mmpde_run_config;
typedef struct mmpde_run_result mmpde_run_result;
typedef struct mmpde_movemesh_config mmpde_movemesh_config;

MMPDE_C_API const char* mmpde_version(void);
/* Message of the last failed call on this thread ("" if none). */
MMPDE_C_API const char* mmpde_last_error(void);
MMPDE_C_API const char* mmpde_status_name(mmpde_status s);
/* n <= 0 restores the default (MMPDE_NUM_THREADS or hardware). */
MMPDE_C_API void mmpde_set_num_threads(int n);
MMPDE_C_API int mmpde_num_threads(void);

MMPDE_C_API int mmpde_problem_count(void);
MMPDE_C_API const char* mmpde_problem_name(int i);

/* ---- meshes ---- */

typedef struct {
  int dim;
  size_t num_vertices;
  size_t num_elements;
  size_t num_boundary_facets;
  double volume;
  double min_volume;
} mmpde_mesh_info;

/* domain: line, square, cube, disk, lshape, channel (notched channel). */
MMPDE_C_API mmpde_status mmpde_mesh_generate(const char* domain, int n, mmpde_mesh** out);
MMPDE_C_API mmpde_status mmpde_mesh_from_arrays(int dim, size_t num_vertices, const double* X, size_t num_elements,
                                                const int32_t* tri, mmpde_mesh** out);
MMPDE_C_API mmpde_status mmpde_mesh_read(const char* path, mmpde_mesh** out);
MMPDE_C_API mmpde_status mmpde_mesh_write(const mmpde_mesh* m, const char* path);
MMPDE_C_API mmpde_status mmpde_mesh_write_vtk(const mmpde_mesh* m, const char* path);
MMPDE_C_API mmpde_status mmpde_mesh_refine(const mmpde_mesh* m, int level, mmpde_mesh** out);
MMPDE_C_API mmpde_status mmpde_mesh_merge(const mmpde_mesh* a, const mmpde_mesh* b, mmpde_mesh** out);
MMPDE_C_API mmpde_status mmpde_mesh_get_info(const mmpde_mesh* m, mmpde_mesh_info* info);
/* Borrowed row-major views, valid until the mesh is freed. */
MMPDE_C_API const double* mmpde_mesh_vertices(const mmpde_mesh* m);
MMPDE_C_API const int32_t* mmpde_mesh_elements(const mmpde_mesh* m);
MMPDE_C_API void mmpde_mesh_free(mmpde_mesh* m);

/* ---- benchmark runs ---- */

MMPDE_C_API mmpde_status mmpde_config_new(const char* problem, mmpde_run_config** out);
/* Reads a key = value file with [sections] into the configuration. */
MMPDE_C_API mmpde_status mmpde_config_load(mmpde_run_config* c, const char* path);
/* section may be NULL or "" for [run] keys. */
MMPDE_C_API mmpde_status mmpde_config_set(mmpde_run_config* c, const char* section, const char* key,
                                          const char* value);
MMPDE_C_API void mmpde_config_free(mmpde_run_config* c);

typedef struct {
  double t_final;
  int steps;
  int shortened_steps;
  double l2;   /* -1 without exact solution */
  double linf;
  double qeq_max;
  double kmin_min;
  size_t num_vertices;
  size_t npde;
} mmpde_run_summary;

MMPDE_C_API mmpde_status mmpde_run(const mmpde_run_config* c, mmpde_run_result** out);
MMPDE_C_API mmpde_status mmpde_result_summary(const mmpde_run_result* r, mmpde_run_summary* s);
/* Final solution, num_vertices x npde row-major; borrowed. */
MMPDE_C_API const double* mmpde_result_solution(const mmpde_run_result* r);
/* Copy of the final mesh. */
MMPDE_C_API mmpde_status mmpde_result_mesh(const mmpde_run_result* r, mmpde_mesh** out);
/* Number of files written and the i-th path. */
MMPDE_C_API size_t mmpde_result_file_count(const mmpde_run_result* r);
MMPDE_C_API const char* mmpde_result_file(const mmpde_run_result* r, size_t i);
MMPDE_C_API void mmpde_result_free(mmpde_run_result* r);

/* ---- mesh adaptation demo ---- */

typedef struct {
  double qgeo_before, qeq_before, qali_before;
  double qgeo_after, qeq_after, qali_after;
  double kmin;
  double energy;
} mmpde_movemesh_summary;

MMPDE_C_API mmpde_status mmpde_movemesh_config_new(mmpde_movemesh_config** out);
/* keys: mesh, domain, n, metric, formulation, t0, t1, iterations, tau,
 * theta, p, integrator, dt0, abstol, reltol, output */
MMPDE_C_API mmpde_status mmpde_movemesh_config_set(mmpde_movemesh_config* c, const char* key, const char* value);
MMPDE_C_API void mmpde_movemesh_config_free(mmpde_movemesh_config* c);
/* out_mesh may be NULL. */
MMPDE_C_API mmpde_status mmpde_movemesh(const mmpde_movemesh_config* c, mmpde_movemesh_summary* s,
                                        mmpde_mesh** out_mesh);

#ifdef __cplusplus
}
#endif

#endif /* MMPDE_C_H */
