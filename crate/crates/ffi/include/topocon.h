#ifndef TOPOCON_H
#define TOPOCON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER,
  TC_STATUS_DIMENSION_MISMATCH,
  TC_STATUS_SINGULAR,
  TC_STATUS_INDEX_OUT_OF_RANGE,
  TC_STATUS_INVALID_PARAMS,
  TC_STATUS_GENERATION_FAILED,
  TC_STATUS_DISCONNECTED,
  TC_STATUS_TOO_LARGE,
  TC_STATUS_DEGENERATE_INITIAL,
  TC_STATUS_BOUND_VIOLATED,
  TC_STATUS_EMPTY_INPUT,
  TC_STATUS_PARSE,
  TC_STATUS_IO,
  TC_STATUS_BUFFER_TOO_SMALL,
  TC_STATUS_PANIC,
} TcStatus;

typedef enum TcFamily {
  TC_FAMILY_ER = 0,
  TC_FAMILY_WS,
  TC_FAMILY_SF,
  TC_FAMILY_RR,
} TcFamily;

/**
 * Opaque network handle.
 */
typedef struct TcNetwork TcNetwork;

/**
 * Opaque linear system handle.
 */
typedef struct TcSystem TcSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t tc_last_error_message(char *buf, uintptr_t len);

/**
 * Builds a system from a row-major `n x n` matrix and a length-`n` right-hand side.
 *
 * # Safety
 * `a` must hold `n * n` doubles, `b` `n` doubles, `out` must be writable.
 */
enum TcStatus tc_system_new(uintptr_t n, const double *a, const double *b, struct TcSystem **out);

/**
 * # Safety
 * `sys` must come from `tc_system_new` and not be used afterwards.
 */
void tc_system_free(struct TcSystem *sys);

/**
 * # Safety
 * `sys` must be a live handle, `out` writable.
 */
enum TcStatus tc_system_phi(const struct TcSystem *sys, double *out);

/**
 * Writes the exact solution into `out[0..n]`.
 *
 * # Safety
 * `sys` must be a live handle and `out` valid for `len` doubles.
 */
enum TcStatus tc_system_x_star(const struct TcSystem *sys, double *out, uintptr_t len);

/**
 * Builds a connected network from `edge_count` pairs stored as
 * `edges[2k], edges[2k+1]`. Self-loops are implied.
 *
 * # Safety
 * `edges` must hold `2 * edge_count` values, `out` must be writable.
 */
enum TcStatus tc_network_from_edges(uintptr_t n,
                                    const uintptr_t *edges,
                                    uintptr_t edge_count,
                                    struct TcNetwork **out);

/**
 * Samples a connected random network. `p` is used by ER and WS, `k` by WS
 * and RR, `m` by SF.
 *
 * # Safety
 * `out` must be writable.
 */
enum TcStatus tc_network_generate(enum TcFamily family,
                                  uintptr_t n,
                                  double p,
                                  uintptr_t k,
                                  uintptr_t m,
                                  uint64_t seed,
                                  struct TcNetwork **out);

/**
 * # Safety
 * `net` must come from a `tc_network_*` constructor and not be used afterwards.
 */
void tc_network_free(struct TcNetwork *net);

/**
 * # Safety
 * `net` must be a live handle, `out` writable.
 */
enum TcStatus tc_network_diameter(const struct TcNetwork *net, uintptr_t *out);

/**
 * Degree of vertex `i`, self-loop included.
 *
 * # Safety
 * `net` must be a live handle, `out` writable.
 */
enum TcStatus tc_network_degree(const struct TcNetwork *net, uintptr_t i, uintptr_t *out);

/**
 * Runs `t_max` rounds of the distributed iteration and writes `R(t)` at
 * checkpoints `0, stride, 2 stride, ..., t_max` into `out`. `written`
 * receives the number of checkpoints; if `out_len` is too small nothing is
 * copied and `TC_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * Handles must be live; `out` valid for `out_len` doubles; `written` writable.
 */
enum TcStatus tc_run(const struct TcSystem *sys,
                     const struct TcNetwork *net,
                     uintptr_t t_max,
                     uintptr_t stride,
                     double radius,
                     uint64_t seed,
                     double *out,
                     uintptr_t out_len,
                     uintptr_t *written);

/**
 * Walk-sum bound on agent `source`'s error after `t + 1` rounds, given the
 * initial error norms `y0[0..n]`. `use_dp` selects the dynamic program
 * instead of enumeration.
 *
 * # Safety
 * Handles must be live; `y0` valid for `n` doubles; `out` writable.
 */
enum TcStatus tc_bound(const struct TcSystem *sys,
                       const struct TcNetwork *net,
                       uintptr_t source,
                       uintptr_t t,
                       const double *y0,
                       bool use_dp,
                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPOCON_H */
