#ifndef FRACTREE_H
#define FRACTREE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Status returned by every fallible entry point.
typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_POINTER = 1,
  FT_STATUS_INVALID_ARGUMENT = 2,
  FT_STATUS_BUFFER_TOO_SMALL = 3,
  FT_STATUS_REJECTION_GUARD = 4,
  FT_STATUS_RESOURCE = 5,
  FT_STATUS_IO = 6,
  FT_STATUS_RUNTIME = 7,
  FT_STATUS_PANIC = 8,
} FtStatus;

// Displacement profile codes accepted by `ft_ct_generate`.
typedef enum FtProfile {
  FT_PROFILE_EXPONENTIAL = 0,
  FT_PROFILE_GAUSSIAN = 1,
  FT_PROFILE_HARD_CUTOFF = 2,
} FtProfile;

// Discrete model codes accepted by `ft_discrete_generate`.
typedef enum FtModel {
  FT_MODEL_SMOOTH = 0,
  FT_MODEL_HARD_THRESHOLD = 1,
} FtModel;

// Opaque continuous-time tree.
typedef struct FtBranchingTree FtBranchingTree;

// Opaque discrete-model tree.
typedef struct FtPointTree FtPointTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ft_version(void);

// Message describing the last failure on the calling thread, or null.
// The pointer stays valid until the next `ft_` call on this thread.
const char *ft_last_error_message(void);

// Grows a continuous-time tree with growth exponent `rho` in dimension `d`
// until `max_vertices` vertices exist or time `max_time` passes
// (`max_time <= 0` means no time limit). On success `*out` receives a
// handle to release with `ft_ct_free`.
//
// # Safety
// `out` must be null or point to writable storage for one pointer.
enum FtStatus ft_ct_generate(uint32_t d,
                             double rho,
                             int32_t profile,
                             uint64_t max_vertices,
                             double max_time,
                             uint64_t seed,
                             struct FtBranchingTree **out);

// Number of vertices, or 0 for a null handle.
//
// # Safety
// `tree` must be null or a live handle from `ft_ct_generate`.
uintptr_t ft_ct_len(const struct FtBranchingTree *tree);

// Spatial dimension, or 0 for a null handle.
//
// # Safety
// `tree` must be null or a live handle from `ft_ct_generate`.
uintptr_t ft_ct_dim(const struct FtBranchingTree *tree);

// Copies `len * dim` coordinates, row-major, into `buf`.
//
// # Safety
// `tree` must be null or a live handle; `buf` must hold `cap` doubles.
enum FtStatus ft_ct_coords(const struct FtBranchingTree *tree, double *buf, uintptr_t cap);

// Copies the `len` birth times into `buf`.
//
// # Safety
// `tree` must be null or a live handle; `buf` must hold `cap` doubles.
enum FtStatus ft_ct_birth_times(const struct FtBranchingTree *tree, double *buf, uintptr_t cap);

// Copies the `len` parent indices into `buf`; the root's entry is -1.
//
// # Safety
// `tree` must be null or a live handle; `buf` must hold `cap` integers.
enum FtStatus ft_ct_parents(const struct FtBranchingTree *tree, int64_t *buf, uintptr_t cap);

// Writes the tree as a point CSV file.
//
// # Safety
// `tree` must be null or a live handle; `path` a NUL-terminated string.
enum FtStatus ft_ct_write_csv(const struct FtBranchingTree *tree, const char *path);

// Releases a handle; null is ignored.
//
// # Safety
// `tree` must be null or a handle from `ft_ct_generate` not yet freed.
void ft_ct_free(struct FtBranchingTree *tree);

// Runs a discrete model for `n_points` steps after the root. On success
// `*out` receives a handle to release with `ft_pt_free`.
//
// # Safety
// `out` must be null or point to writable storage for one pointer.
enum FtStatus ft_discrete_generate(uint32_t d,
                                   double alpha,
                                   double theta,
                                   uint64_t n_points,
                                   int32_t model,
                                   uint64_t seed,
                                   struct FtPointTree **out);

// Number of points including the root, or 0 for a null handle.
//
// # Safety
// `tree` must be null or a live handle from `ft_discrete_generate`.
uintptr_t ft_pt_len(const struct FtPointTree *tree);

// Spatial dimension, or 0 for a null handle.
//
// # Safety
// `tree` must be null or a live handle from `ft_discrete_generate`.
uintptr_t ft_pt_dim(const struct FtPointTree *tree);

// Copies `len * dim` coordinates, row-major, into `buf`.
//
// # Safety
// `tree` must be null or a live handle; `buf` must hold `cap` doubles.
enum FtStatus ft_pt_coords(const struct FtPointTree *tree, double *buf, uintptr_t cap);

// Copies the `len` parent indices into `buf`; the root's entry is -1.
//
// # Safety
// `tree` must be null or a live handle; `buf` must hold `cap` integers.
enum FtStatus ft_pt_parents(const struct FtPointTree *tree, int64_t *buf, uintptr_t cap);

// Copies `len` seed flags (1 for points attached to the root) into `buf`.
//
// # Safety
// `tree` must be null or a live handle; `buf` must hold `cap` bytes.
enum FtStatus ft_pt_is_seed(const struct FtPointTree *tree, uint8_t *buf, uintptr_t cap);

// Writes the tree as a point CSV file.
//
// # Safety
// `tree` must be null or a live handle; `path` a NUL-terminated string.
enum FtStatus ft_pt_write_csv(const struct FtPointTree *tree, const char *path);

// Releases a handle; null is ignored.
//
// # Safety
// `tree` must be null or a handle from `ft_discrete_generate` not yet freed.
void ft_pt_free(struct FtPointTree *tree);

// Box-counting dimension of `n_points` points in dimension `d` over the
// default scale sweep.
//
// # Safety
// `coords` must hold `n_points * d` doubles; `slope` and `stderr` must be
// writable (`stderr` may be null).
enum FtStatus ft_box_count_dimension(const double *coords,
                                     uintptr_t n_points,
                                     uint32_t d,
                                     double *slope,
                                     double *stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACTREE_H */
