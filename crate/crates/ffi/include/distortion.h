#ifndef DISTORTION_H
#define DISTORTION_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Energy selector for [`distortion_map_energy`].
 */
typedef enum DistortionFunctional {
  /**
   * Mean distortion `∫ K^p` of the map (`p > 1`).
   */
  DISTORTION_FUNCTIONAL_MEAN_DISTORTION = 0,
  /**
   * Inverse energy `∫ K^{p−1} ‖Dh‖²` of the map (`p ≥ 1`).
   */
  DISTORTION_FUNCTIONAL_INVERSE_ENERGY = 1,
  /**
   * Dirichlet energy `∫ ‖Df‖²` (identity on a unit square: 2; `p` ignored).
   */
  DISTORTION_FUNCTIONAL_DIRICHLET = 2,
} DistortionFunctional;

/**
 * Result of every fallible call.
 */
typedef enum DistortionStatus {
  DISTORTION_STATUS_OK = 0,
  DISTORTION_STATUS_NULL_POINTER = 1,
  DISTORTION_STATUS_INVALID_ARGUMENT = 2,
  DISTORTION_STATUS_INVALID_MESH = 3,
  DISTORTION_STATUS_NOT_INVERTIBLE = 4,
  DISTORTION_STATUS_NUMERICAL = 5,
  DISTORTION_STATUS_IO = 6,
  DISTORTION_STATUS_PANIC = 7,
} DistortionStatus;

/**
 * Piecewise-linear map on a mesh.
 */
typedef struct DistortionMap DistortionMap;

/**
 * Triangle mesh with counterclockwise triangles.
 */
typedef struct DistortionMesh DistortionMesh;

/**
 * Outcome of a minimization.
 */
typedef struct DistortionSolution DistortionSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *distortion_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * without the terminator; 0 after a successful call.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t distortion_last_error(char *buf, size_t len);

/**
 * Triangulates a domain (`disk:N[:R]`, `rect:W:H`, `l-shape`,
 * `sector:R0:R1:DEG[:N]` or a JSON file) with target edge length `edge`.
 *
 * # Safety
 * `domain` must be a NUL-terminated string; `out` must be writable.
 */
enum DistortionStatus distortion_mesh_triangulate(const char *domain,
                                                  double edge,
                                                  struct DistortionMesh **out);

/**
 * Builds a mesh from interleaved `xy` coordinates (`2·vertex_count`
 * doubles), `3·triangle_count` vertex indices and the boundary loop.
 *
 * # Safety
 * Arrays must hold the stated number of elements; `out` must be writable.
 */
enum DistortionStatus distortion_mesh_new(const double *xy,
                                          size_t vertex_count,
                                          const uint32_t *triangles,
                                          size_t triangle_count,
                                          const uint32_t *boundary,
                                          size_t boundary_count,
                                          struct DistortionMesh **out);

/**
 * Number of vertices (0 for a null handle).
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t distortion_mesh_vertex_count(const struct DistortionMesh *mesh);

/**
 * Number of triangles (0 for a null handle).
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t distortion_mesh_triangle_count(const struct DistortionMesh *mesh);

/**
 * Copies the vertex coordinates into `xy` (`2·capacity` doubles).
 *
 * # Safety
 * `mesh` must be a live handle and `xy` must hold `2·capacity` doubles.
 */
enum DistortionStatus distortion_mesh_vertices(const struct DistortionMesh *mesh,
                                               double *xy,
                                               size_t capacity);

/**
 * Releases a mesh. Maps built on it stay valid.
 *
 * # Safety
 * `mesh` must be null or a handle not yet freed.
 */
void distortion_mesh_free(struct DistortionMesh *mesh);

/**
 * The map sending vertex `i` of `mesh` to `(xy[2i], xy[2i+1])`.
 *
 * # Safety
 * `mesh` must be a live handle, `xy` must hold `2·count` doubles and `out`
 * must be writable.
 */
enum DistortionStatus distortion_map_new(const struct DistortionMesh *mesh,
                                         const double *xy,
                                         size_t count,
                                         struct DistortionMap **out);

/**
 * Number of vertices of the map's mesh (0 for a null handle).
 *
 * # Safety
 * `map` must be null or a live handle.
 */
size_t distortion_map_vertex_count(const struct DistortionMap *map);

/**
 * Copies the vertex images into `xy` (`2·capacity` doubles).
 *
 * # Safety
 * `map` must be a live handle and `xy` must hold `2·capacity` doubles.
 */
enum DistortionStatus distortion_map_targets(const struct DistortionMap *map,
                                             double *xy,
                                             size_t capacity);

/**
 * Smallest triangle Jacobian.
 *
 * # Safety
 * `map` must be a live handle and `out` writable.
 */
enum DistortionStatus distortion_map_min_jacobian(const struct DistortionMap *map, double *out);

/**
 * Evaluates an energy of the map; `+∞` when a triangle is flipped.
 *
 * # Safety
 * `map` must be a live handle and `out` writable.
 */
enum DistortionStatus distortion_map_energy(const struct DistortionMap *map,
                                            enum DistortionFunctional functional,
                                            double p,
                                            double *out);

/**
 * Releases a map.
 *
 * # Safety
 * `map` must be null or a handle not yet freed.
 */
void distortion_map_free(struct DistortionMap *map);

/**
 * Minimizes the problem described by `problem_json` (the CLI's problem
 * format). Relative paths inside it resolve against `base_dir`, or the
 * working directory when `base_dir` is null. `seed` < 0 starts from the
 * problem's base map, otherwise from the first random start of that seed.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum DistortionStatus distortion_minimize(const char *problem_json,
                                          const char *base_dir,
                                          int64_t seed,
                                          struct DistortionSolution **out);

/**
 * Final energy of a solution.
 *
 * # Safety
 * `solution` must be a live handle and `out` writable.
 */
enum DistortionStatus distortion_solution_energy(const struct DistortionSolution *solution,
                                                 double *out);

/**
 * Accepted descent steps.
 *
 * # Safety
 * `solution` must be a live handle and `out` writable.
 */
enum DistortionStatus distortion_solution_iterations(const struct DistortionSolution *solution,
                                                     size_t *out);

/**
 * Whether the gradient tolerance was met.
 *
 * # Safety
 * `solution` must be a live handle and `out` writable.
 */
enum DistortionStatus distortion_solution_converged(const struct DistortionSolution *solution,
                                                    bool *out);

/**
 * The minimizing map of the problem's unknown (inverted back for
 * mean-distortion problems) as a new handle.
 *
 * # Safety
 * `solution` must be a live handle and `out` writable.
 */
enum DistortionStatus distortion_solution_map(const struct DistortionSolution *solution,
                                              struct DistortionMap **out);

/**
 * Releases a solution.
 *
 * # Safety
 * `solution` must be null or a handle not yet freed.
 */
void distortion_solution_free(struct DistortionSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DISTORTION_H */
