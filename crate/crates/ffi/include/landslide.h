#ifndef LANDSLIDE_H
#define LANDSLIDE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_ARGUMENT = 2,
  LS_STATUS_DEGENERATE = 3,
  LS_STATUS_NO_CONVERGENCE = 4,
  LS_STATUS_FLATNESS = 5,
  LS_STATUS_SPECTRAL_ON_CIRCLE = 6,
  LS_STATUS_IO = 7,
  LS_STATUS_INTERNAL = 8,
} LsStatus;

/**
 * Solved data on a cylinder together with its flat connection.
 */
typedef struct LsData LsData;

/**
 * Immersed surface at one spectral value.
 */
typedef struct LsSurface LsSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
 * `len`) and returns the full message length without the terminator, 0 if none.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t ls_last_error_message(char *buf, uintptr_t len);

/**
 * Solves the y-dependent structure equations on an `nx × ny` cylinder of size
 * `lx × ly` with constant `Q = q_re + i q_im` and `u(0) = u0`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum LsStatus ls_profile_new(double s,
                             double q_re,
                             double q_im,
                             double u0,
                             uintptr_t nx,
                             uintptr_t ny,
                             double lx,
                             double ly,
                             struct LsData **out);

/**
 * # Safety
 * `data` must be null or a handle from [`ls_profile_new`] not freed before.
 */
void ls_data_free(struct LsData *data);

/**
 * Sup-norm of the structure-equation residual.
 *
 * # Safety
 * `data` must be a live handle and `out` valid for writing.
 */
enum LsStatus ls_data_gauss_residual(const struct LsData *data, double *out);

/**
 * Interior sup-norm of the zero-curvature defect at `λ`.
 *
 * # Safety
 * `data` must be a live handle and `out` valid for writing.
 */
enum LsStatus ls_flatness_residual(const struct LsData *data,
                                   double l_re,
                                   double l_im,
                                   double *out);

/**
 * Loop holonomy around the cylinder at `μ = √q`, written row-major as
 * `re₁₁, im₁₁, re₁₂, im₁₂, re₂₁, im₂₁, re₂₂, im₂₂`.
 *
 * # Safety
 * `data` must be a live handle and `out` valid for 8 doubles.
 */
enum LsStatus ls_frame_holonomy(const struct LsData *data, double q_re, double q_im, double *out);

/**
 * Runs the complex landslide at `q` with `0 < |q| < 1` and writes the trace mismatch
 * between the frame holonomy and the holonomy of the developing map.
 *
 * # Safety
 * `data` must be a live handle and `out` valid for writing.
 */
enum LsStatus ls_complex_landslide(const struct LsData *data,
                                   double q_re,
                                   double q_im,
                                   double *out);

/**
 * Surface at `λ₀` with `0 < |λ₀| < 1`, frame based at the middle of the first column.
 *
 * # Safety
 * `data` must be a live handle and `out` valid for writing one pointer.
 */
enum LsStatus ls_surface_new(const struct LsData *data,
                             double l_re,
                             double l_im,
                             struct LsSurface **out);

/**
 * # Safety
 * `surface` must be null or a handle from [`ls_surface_new`] not freed before.
 */
void ls_surface_free(struct LsSurface *surface);

/**
 * Number of vertices, 0 for a null handle.
 *
 * # Safety
 * `surface` must be null or a live handle.
 */
uintptr_t ls_surface_vertex_count(const struct LsSurface *surface);

/**
 * Writes Poincaré-ball coordinates `x, y, z` of every vertex, row by row. `len` is the
 * capacity of `buf` in doubles and must be at least three times the vertex count.
 *
 * # Safety
 * `surface` must be a live handle and `buf` valid for `len` doubles.
 */
enum LsStatus ls_surface_vertices(const struct LsSurface *surface, double *buf, uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LANDSLIDE_H */
