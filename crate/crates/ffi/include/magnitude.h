#ifndef MAGNITUDE_H
#define MAGNITUDE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum MagStatus {
  MAG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  MAG_STATUS_NULL_POINTER = 1,
  /**
   * Malformed arguments, unsupported domains or shapes.
   */
  MAG_STATUS_INVALID_INPUT = 2,
  /**
   * A kernel solve failed: not positive definite, ill-conditioned or
   * inaccurate.
   */
  MAG_STATUS_SOLVE_FAILED = 3,
  MAG_STATUS_DEGENERATE_MESH = 4,
  MAG_STATUS_MISSING_LAMBDA = 5,
  /**
   * Symbol calculus refused the request.
   */
  MAG_STATUS_SYMBOL_ERROR = 6,
  /**
   * A caller-provided buffer is too small.
   */
  MAG_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * Internal panic; the library state is unchanged.
   */
  MAG_STATUS_PANIC = 8,
} MagStatus;

/**
 * A finite metric space.
 */
typedef struct MagSpace MagSpace;

/**
 * A polyhomogeneous symbol.
 */
typedef struct MagSymbol MagSymbol;

/**
 * Volume, boundary area, integrated mean curvature and Willmore energy.
 */
typedef struct MagFunctionals {
  double volume;
  double area;
  double mean_curvature_integral;
  double willmore;
} MagFunctionals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *mag_last_error(void);

/**
 * Library version as a static string.
 */
const char *mag_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void mag_string_free(char *s);

/**
 * Space of `n` points in `R^dim`, coordinates row-major in `coords`.
 *
 * # Safety
 * `coords` must point to `n * dim` doubles; `out` must be writable.
 */
enum MagStatus mag_space_from_points(const double *coords,
                                     size_t n,
                                     size_t dim,
                                     struct MagSpace **out);

/**
 * Space from a row-major `n × n` distance matrix.
 *
 * # Safety
 * `dist` must point to `n * n` doubles; `out` must be writable.
 */
enum MagStatus mag_space_from_distances(const double *dist, size_t n, struct MagSpace **out);

/**
 * # Safety
 * `space` must come from this library and not have been freed. Null is ignored.
 */
void mag_space_free(struct MagSpace *space);

/**
 * Number of points, 0 for a null handle.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
size_t mag_space_len(const struct MagSpace *space);

/**
 * Magnitude of `space` with its metric scaled by `r`.
 *
 * # Safety
 * `space` must be a live handle; `out` must be writable.
 */
enum MagStatus mag_magnitude(const struct MagSpace *space, double r, double *out);

/**
 * Weighting at scale `r` into `weights`, which holds `len` doubles.
 *
 * # Safety
 * `space` must be a live handle; `weights` must hold `len` doubles.
 */
enum MagStatus mag_weighting(const struct MagSpace *space, double r, double *weights, size_t len);

/**
 * Sampled lower bound for the magnitude of a domain (JSON or a bare name)
 * at scale `r`, refined with farthest-point samples up to `n_max` points.
 *
 * # Safety
 * `domain` must be a NUL-terminated string; `out` must be writable.
 */
enum MagStatus mag_estimate_domain(const char *domain,
                                   double r,
                                   double tol,
                                   size_t n_max,
                                   uint64_t seed,
                                   double *out);

/**
 * Boundary functionals of a domain by quadrature of `quad_order` nodes per axis.
 *
 * # Safety
 * `domain` must be a NUL-terminated string; `out` must be writable.
 */
enum MagStatus mag_geometry(const char *domain, size_t quad_order, struct MagFunctionals *out);

/**
 * Parses a symbol from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum MagStatus mag_symbol_from_json(const char *json, struct MagSymbol **out);

/**
 * JSON form of a symbol; release with [`mag_string_free`].
 *
 * # Safety
 * `sym` must be a live handle; `out` must be writable.
 */
enum MagStatus mag_symbol_to_json(const struct MagSymbol *sym, char **out);

/**
 * # Safety
 * `sym` must come from this library and not have been freed. Null is ignored.
 */
void mag_symbol_free(struct MagSymbol *sym);

/**
 * Composition `a ∘ b` down to degree `cutoff`.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum MagStatus mag_symbol_product(const struct MagSymbol *a,
                                  const struct MagSymbol *b,
                                  int32_t cutoff,
                                  struct MagSymbol **out);

/**
 * Parametrix of `a` down to degree `cutoff`.
 *
 * # Safety
 * `a` must be a live handle; `out` must be writable.
 */
enum MagStatus mag_symbol_parametrix(const struct MagSymbol *a,
                                     int32_t cutoff,
                                     struct MagSymbol **out);

/**
 * Writes 1 to `out` when every retained term of `sym` matches the identity.
 *
 * # Safety
 * `sym` must be a live handle; `out` must be writable.
 */
enum MagStatus mag_symbol_is_identity(const struct MagSymbol *sym, int32_t *out);

/**
 * Order of a symbol, 0 for a null handle.
 *
 * # Safety
 * `sym` must be null or a live handle.
 */
int32_t mag_symbol_order(const struct MagSymbol *sym);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAGNITUDE_H */
