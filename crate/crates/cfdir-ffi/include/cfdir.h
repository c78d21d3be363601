#ifndef CFDIR_H
#define CFDIR_H

/* Generated by cbindgen from cfdir-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum CfdirStatus {
  CFDIR_STATUS_OK = 0,
  CFDIR_STATUS_INVALID_ARGUMENT = 1,
  CFDIR_STATUS_DIMENSION_MISMATCH = 2,
  CFDIR_STATUS_DEGENERATE_DIRECTION = 3,
  CFDIR_STATUS_NO_BASELINE_FOUND = 4,
  CFDIR_STATUS_NOT_POSITIVE_CLASS = 5,
  CFDIR_STATUS_NON_CONVERGENCE = 6,
  CFDIR_STATUS_BUFFER_TOO_SMALL = 7,
  CFDIR_STATUS_INTERNAL = 8,
} CfdirStatus;

// Opaque set of discovered directions (the gradient direction first, then
// Hessian directions by rank).
typedef struct CfdirDirectionSet CfdirDirectionSet;

// Opaque world handle: the synthetic generator/classifier pair plus the run
// parameters they were configured with.
typedef struct CfdirWorld CfdirWorld;

// Proxy-training and direction-extraction parameters for
// [`cfdir_discover`]. Zero-initialize and overwrite what you need, or call
// [`cfdir_discover_params_default`].
typedef struct CfdirDiscoverParams {
  // Perturbation ball radius around the source latent.
  double radius;
  // Ball samples per dataset (origin sample added on top).
  size_t sample_count;
  size_t epochs;
  size_t batch_size;
  double learning_rate;
  // Fraction of samples held out for fit metrics, in (0, 0.5].
  double holdout_fraction;
  // Trade-off weight between classifier score and distance.
  double lambda;
  // Number of Hessian directions to extract (1..=latent_dim).
  size_t h_count;
  // Distance metric: 0 mean-squared, 1 patch-stat.
  uint32_t metric;
  // Seed for sampling and training.
  uint64_t seed;
} CfdirDiscoverParams;

// Line-search outcome.
typedef struct CfdirCfResult {
  double alpha;
  double logit_before;
  double logit_after;
  double distance;
  double cf_loss;
  bool flipped;
} CfdirCfResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the latest error message for this thread into `buf` (NUL
// terminated, truncated to `cap`). Returns the full message length in
// bytes, excluding the terminator.
//
// # Safety
// `buf` must point to `cap` writable bytes, or be null (then only the
// required length is returned).
size_t cfdir_last_error_message(char *buf, size_t cap);

// Creates a world from the built-in benchmark configuration.
struct CfdirWorld *cfdir_world_new_benchmark(void);

// Creates a world from a full run-configuration JSON document (the same
// schema the CLI consumes). Returns null on error.
//
// # Safety
// `config_json` must be a valid NUL-terminated UTF-8 string.
struct CfdirWorld *cfdir_world_new_from_config_json(const char *config_json);

// Frees a world handle; null is a no-op.
//
// # Safety
// `world` must have come from a `cfdir_world_new_*` function and not have
// been freed already.
void cfdir_world_free(struct CfdirWorld *world);

// Latent width of the world's generator; 0 for a null handle.
//
// # Safety
// `world` must be a live handle or null.
size_t cfdir_world_latent_dim(const struct CfdirWorld *world);

// Image dimensions of the world's generator.
//
// # Safety
// `world` must be a live handle or null; `width`/`height` must be writable
// or null.
enum CfdirStatus cfdir_world_image_size(const struct CfdirWorld *world,
                                        size_t *width,
                                        size_t *height);

// Decodes a latent into `out_pixels` (row-major, `width * height` floats in
// [0, 1]).
//
// # Safety
// `world` must be a live handle; `z_sem` must point to `z_len` doubles;
// `out_pixels` must have room for `out_cap` floats.
enum CfdirStatus cfdir_world_decode(const struct CfdirWorld *world,
                                    const double *z_sem,
                                    size_t z_len,
                                    uint64_t z_t_seed,
                                    float *out_pixels,
                                    size_t out_cap);

// Classifies an image; positive logit means positive class.
//
// # Safety
// `world` must be a live handle; `pixels` must point to `width * height`
// floats; `out_logit` must be writable.
enum CfdirStatus cfdir_world_classify(const struct CfdirWorld *world,
                                      const float *pixels,
                                      size_t width,
                                      size_t height,
                                      double *out_logit);

// Fills `params` with the benchmark defaults.
//
// # Safety
// `params` must be writable or null.
void cfdir_discover_params_default(struct CfdirDiscoverParams *params);

// Trains a proxy around `z_sem` and extracts the gradient direction plus
// `params.h_count` Hessian directions. Returns null on failure.
//
// # Safety
// `world` must be a live handle; `z_sem` must point to `z_len` doubles;
// `params` must be readable.
struct CfdirDirectionSet *cfdir_discover(const struct CfdirWorld *world,
                                         const double *z_sem,
                                         size_t z_len,
                                         uint64_t z_t_seed,
                                         const struct CfdirDiscoverParams *params);

// Number of directions in a set; 0 for null.
//
// # Safety
// `set` must be a live handle or null.
size_t cfdir_directions_len(const struct CfdirDirectionSet *set);

// Copies direction `index` into `out_vector`. `out_kind` receives 0 for the
// gradient direction and 1 for Hessian directions; `out_eigenvalue` is
// meaningful only for the latter.
//
// # Safety
// `set` must be a live handle; `out_vector` must have room for `out_cap`
// doubles; the remaining out pointers must be writable or null.
enum CfdirStatus cfdir_directions_get(const struct CfdirDirectionSet *set,
                                      size_t index,
                                      double *out_vector,
                                      size_t out_cap,
                                      uint32_t *out_kind,
                                      size_t *out_rank,
                                      double *out_eigenvalue);

// Frees a direction set; null is a no-op.
//
// # Safety
// `set` must have come from [`cfdir_discover`] and not have been freed.
void cfdir_directions_free(struct CfdirDirectionSet *set);

// Line search along `direction` over a symmetric step grid: decodes every
// step, scores the counterfactual loss, and reports the selected step.
//
// # Safety
// `world` must be a live handle; `z_sem` and `direction` must point to
// `z_len` doubles each; `out` must be writable.
enum CfdirStatus cfdir_line_search(const struct CfdirWorld *world,
                                   const double *z_sem,
                                   size_t z_len,
                                   uint64_t z_t_seed,
                                   const double *direction,
                                   double grid_half_width,
                                   size_t grid_count,
                                   double lambda,
                                   uint32_t metric,
                                   struct CfdirCfResult *out);

// Latent-path attribution along `direction`: finds a baseline under
// `baseline_tau`, decodes `path_steps` steps towards it, and writes the
// signed per-pixel map into `out_map` (row-major, `width * height` doubles).
//
// # Safety
// `world` must be a live handle; `z_sem` and `direction` must point to
// `z_len` doubles each; `out_map` must have room for `out_cap` doubles.
enum CfdirStatus cfdir_attribute(const struct CfdirWorld *world,
                                 const double *z_sem,
                                 size_t z_len,
                                 uint64_t z_t_seed,
                                 const double *direction,
                                 double grid_half_width,
                                 size_t grid_count,
                                 double baseline_tau,
                                 size_t path_steps,
                                 double eps_px,
                                 double *out_map,
                                 size_t out_cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CFDIR_H */
