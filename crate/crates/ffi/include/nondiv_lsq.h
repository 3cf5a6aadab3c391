#ifndef NONDIV_LSQ_H
#define NONDIV_LSQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LsqStatus {
  LSQ_STATUS_OK = 0,
  LSQ_STATUS_INVALID_ARGUMENT = 1,
  LSQ_STATUS_REFINEMENT_FAILURE = 2,
  LSQ_STATUS_ILL_CONDITIONED = 3,
  LSQ_STATUS_NOT_ELLIPTIC = 4,
  LSQ_STATUS_NON_CONVERGENCE = 5,
  LSQ_STATUS_IO = 6,
  LSQ_STATUS_NULL_POINTER = 7,
  LSQ_STATUS_PANIC = 8,
} LsqStatus;

/**
 * Opaque triangulation handle.
 */
typedef struct LsqMesh LsqMesh;

/**
 * Opaque handle to a two-stage solution with its estimator and errors.
 */
typedef struct LsqSolution LsqSolution;

typedef struct LsqMeshCounts {
  size_t vertices;
  size_t edges;
  size_t triangles;
} LsqMeshCounts;

typedef struct LsqErrors {
  double p_l2;
  double p_energy;
  double u_l2;
  double u_energy;
  double eta_total;
} LsqErrors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Uniform `nx × ny` triangulation of `[xmin, xmax] × [ymin, ymax]`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum LsqStatus lsq_mesh_rect(double xmin,
                             double ymin,
                             double xmax,
                             double ymax,
                             size_t nx,
                             size_t ny,
                             struct LsqMesh **out);

/**
 * # Safety
 * `mesh` must come from this library; `out` must be writable.
 */
enum LsqStatus lsq_mesh_counts(const struct LsqMesh *mesh, struct LsqMeshCounts *out);

/**
 * # Safety
 * `mesh` must come from this library; `out` must be writable.
 */
enum LsqStatus lsq_mesh_h_max(const struct LsqMesh *mesh, double *out);

/**
 * Longest-edge bisection of `count` marked triangles into a new mesh.
 *
 * # Safety
 * `marked` must point to `count` readable ids (or be null when `count` is
 * 0); `out` must be writable.
 */
enum LsqStatus lsq_mesh_bisect(const struct LsqMesh *mesh,
                               const size_t *marked,
                               size_t count,
                               struct LsqMesh **out);

/**
 * # Safety
 * `mesh` must come from this library; `path` must be a NUL-terminated string.
 */
enum LsqStatus lsq_mesh_write_vtk(const struct LsqMesh *mesh, const char *path);

/**
 * # Safety
 * `mesh` must come from this library and not be used afterwards. Null is a
 * no-op.
 */
void lsq_mesh_free(struct LsqMesh *mesh);

/**
 * Two-stage solve of the named case on `mesh` with polynomial degree
 * `degree` and penalty `mu`; also evaluates the estimator and errors.
 *
 * # Safety
 * `mesh` must come from this library; `case_name` must be NUL-terminated;
 * `out` must be writable.
 */
enum LsqStatus lsq_solve(const struct LsqMesh *mesh,
                         const char *case_name,
                         uint32_t degree,
                         double mu,
                         struct LsqSolution **out);

/**
 * # Safety
 * `sol` must come from this library; `out` must be writable.
 */
enum LsqStatus lsq_solution_errors(const struct LsqSolution *sol, struct LsqErrors *out);

/**
 * Copies the element indicators `η_K` into `buf`, which must hold one
 * value per triangle.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum LsqStatus lsq_solution_eta(const struct LsqSolution *sol, double *buf, size_t len);

/**
 * Bulk marking with fraction `theta`; writes up to `cap` triangle ids to
 * `buf` and the number marked to `count`.
 *
 * # Safety
 * `buf` must point to `cap` writable values; `count` must be writable.
 */
enum LsqStatus lsq_solution_mark(const struct LsqSolution *sol,
                                 double theta,
                                 size_t *buf,
                                 size_t cap,
                                 size_t *count);

/**
 * # Safety
 * `sol` must come from this library; `path` must be NUL-terminated.
 */
enum LsqStatus lsq_solution_write_vtk(const struct LsqSolution *sol, const char *path);

/**
 * # Safety
 * `sol` must come from this library and not be used afterwards. Null is a
 * no-op.
 */
void lsq_solution_free(struct LsqSolution *sol);

/**
 * Cordes parameter `ε` of the named case's coefficient, sampled on a
 * `samples × samples` grid.
 *
 * # Safety
 * `case_name` must be NUL-terminated; `out` must be writable.
 */
enum LsqStatus lsq_cordes_epsilon(const char *case_name, size_t samples, double *out);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call into the library from the same thread.
 */
const char *lsq_last_error(void);

const char *lsq_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NONDIV_LSQ_H */
