#ifndef SSFIND_H
#define SSFIND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SsfStatus {
  SSF_STATUS_OK = 0,
  SSF_STATUS_NULL_POINTER = 1,
  SSF_STATUS_INVALID_ARGUMENT = 2,
  SSF_STATUS_PARSE = 3,
  SSF_STATUS_GRAPH = 4,
  SSF_STATUS_DECODE = 5,
  SSF_STATUS_BUFFER_TOO_SMALL = 6,
  SSF_STATUS_PANIC = 7,
} SsfStatus;

/**
 * Outcome of the erasure solve.
 */
typedef enum SsfVerdict {
  SSF_VERDICT_SUCCESS = 0,
  SSF_VERDICT_NO_SOLUTION = 1,
  SSF_VERDICT_AMBIGUOUS_LOGICAL = 2,
} SsfVerdict;

typedef struct SsfCode SsfCode;

typedef struct SsfDecodeResult SsfDecodeResult;

typedef struct SsfGraph SsfGraph;

typedef struct SsfCodeParams {
  size_t n;
  size_t m;
  size_t delta_v;
  size_t delta_c;
  size_t num_qubits;
  size_t num_checks;
  size_t num_generators;
  size_t logical_qubits;
} SsfCodeParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ssf_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `cap`) and returns the untruncated length.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t ssf_last_error(char *buf, size_t cap);

/**
 * Samples a random biregular graph with `n` left vertices.
 *
 * # Safety
 * `out` must be a valid pointer to write a handle into.
 */
enum SsfStatus ssf_graph_generate(size_t n,
                                  size_t delta_v,
                                  size_t delta_c,
                                  uint64_t seed,
                                  struct SsfGraph **out);

/**
 * Parses a graph in the text format written by [`ssf_graph_write`].
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SsfStatus ssf_graph_parse(const char *text, struct SsfGraph **out);

/**
 * Writes the graph's text form into `buf` with a trailing NUL. `out_len`
 * receives the text length without the NUL.
 *
 * # Safety
 * `graph` must be a live handle; `buf` must hold `cap` bytes or be null
 * when `cap == 0`; `out_len` must be valid.
 */
enum SsfStatus ssf_graph_write(const struct SsfGraph *graph,
                               char *buf,
                               size_t cap,
                               size_t *out_len);

/**
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void ssf_graph_free(struct SsfGraph *graph);

/**
 * Builds the hypergraph product code of `graph`. The graph handle stays
 * owned by the caller.
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum SsfStatus ssf_code_new(const struct SsfGraph *graph, struct SsfCode **out);

/**
 * # Safety
 * `code` must be null or a handle not yet freed.
 */
void ssf_code_free(struct SsfCode *code);

/**
 * # Safety
 * `code` must be a live handle and `out` a valid pointer.
 */
enum SsfStatus ssf_code_params(const struct SsfCode *code, struct SsfCodeParams *out);

/**
 * Syndrome of a qubit set, as sorted check indices. Repeated qubits cancel.
 *
 * # Safety
 * `code` must be a live handle, `qubits` must hold `len` entries (or be
 * null with `len == 0`), `out` must hold `cap` entries and `out_len` must
 * be valid.
 */
enum SsfStatus ssf_code_syndrome(const struct SsfCode *code,
                                 const size_t *qubits,
                                 size_t len,
                                 size_t *out,
                                 size_t cap,
                                 size_t *out_len);

/**
 * Decodes a syndrome given as check indices with `ε = eps_num/eps_den`.
 *
 * # Safety
 * `code` must be a live handle, `checks` must hold `len` entries (or be
 * null with `len == 0`) and `out` must be valid.
 */
enum SsfStatus ssf_decode_syndrome(const struct SsfCode *code,
                                   const size_t *checks,
                                   size_t len,
                                   int64_t eps_num,
                                   int64_t eps_den,
                                   struct SsfDecodeResult **out);

/**
 * Decodes the syndrome of a known error and also judges the correction
 * against it (see [`ssf_result_coset_equivalent`]).
 *
 * # Safety
 * As for [`ssf_decode_syndrome`], with `qubits` holding `len` entries.
 */
enum SsfStatus ssf_decode_error(const struct SsfCode *code,
                                const size_t *qubits,
                                size_t len,
                                int64_t eps_num,
                                int64_t eps_den,
                                struct SsfDecodeResult **out);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void ssf_result_free(struct SsfDecodeResult *result);

/**
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum SsfStatus ssf_result_verdict(const struct SsfDecodeResult *result, enum SsfVerdict *out);

/**
 * 1 if the correction matches the true error up to stabilizers, 0 if not,
 * -1 when no error was supplied or `result` is null.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
int32_t ssf_result_coset_equivalent(const struct SsfDecodeResult *result);

/**
 * Number of decoder iterations, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t ssf_result_iterations(const struct SsfDecodeResult *result);

/**
 * Envelope qubit indices in ascending order.
 *
 * # Safety
 * `result` must be a live handle, `buf` must hold `cap` entries and
 * `out_len` must be valid.
 */
enum SsfStatus ssf_result_envelope(const struct SsfDecodeResult *result,
                                   size_t *buf,
                                   size_t cap,
                                   size_t *out_len);

/**
 * Correction qubit indices in ascending order.
 *
 * # Safety
 * As for [`ssf_result_envelope`].
 */
enum SsfStatus ssf_result_correction(const struct SsfDecodeResult *result,
                                     size_t *buf,
                                     size_t cap,
                                     size_t *out_len);

/**
 * Decoding-radius coefficients (multiples of the distance) for
 * `r = r_num/r_den`, `ε = eps_num/eps_den` and `delta_c`, in the order
 * LTZ small-set flip, Grospellier small-set flip, ssfind. `out` receives
 * three doubles.
 *
 * # Safety
 * `out` must point to three writable doubles.
 */
enum SsfStatus ssf_radius_coefficients(int64_t r_num,
                                       int64_t r_den,
                                       int64_t eps_num,
                                       int64_t eps_den,
                                       size_t delta_c,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSFIND_H */
