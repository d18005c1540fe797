#ifndef RDPC_H
#define RDPC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of an FFI call.
 */
typedef enum RdpcStatus {
  RDPC_STATUS_OK = 0,
  RDPC_STATUS_NULL_POINTER = 1,
  RDPC_STATUS_INVALID_ARGUMENT = 2,
  RDPC_STATUS_TOO_LARGE = 3,
  /**
   * The constraint set is empty.
   */
  RDPC_STATUS_INFEASIBLE = 4,
  /**
   * The solver stopped before certifying its tolerance.
   */
  RDPC_STATUS_MAX_ITERATIONS = 5,
  RDPC_STATUS_BUDGET_EXHAUSTED = 6,
  RDPC_STATUS_ZERO_INDEX = 7,
  RDPC_STATUS_TRUNCATED = 8,
  RDPC_STATUS_MALFORMED = 9,
  RDPC_STATUS_BAD_MAGIC = 10,
  RDPC_STATUS_UNSUPPORTED_VERSION = 11,
  RDPC_STATUS_PANIC = 12,
} RdpcStatus;

/**
 * Realism divergence for [`rdpc_rdpf_solve`].
 */
typedef enum RdpcDivergence {
  RDPC_DIVERGENCE_TOTAL_VARIATION = 0,
  RDPC_DIVERGENCE_KULLBACK_LEIBLER = 1,
  /**
   * Needs per-symbol scalar values for both alphabets.
   */
  RDPC_DIVERGENCE_WASSERSTEIN1 = 2,
} RdpcDivergence;

/**
 * Opaque channel-simulation codec.
 */
typedef struct RdpcCodec RdpcCodec;

/**
 * Opaque decoded container.
 */
typedef struct RdpcStream RdpcStream;

/**
 * Heap bytes owned by the library; release with [`rdpc_buffer_free`].
 */
typedef struct RdpcBuffer {
  uint8_t *data;
  size_t len;
} RdpcBuffer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *rdpc_status_message(enum RdpcStatus status);

/**
 * Solves `R(theta_d, theta_div)` for a source of `m` symbols, an `m × n`
 * distortion matrix and the chosen divergence. `theta_div` may be
 * `INFINITY`. `source_values` (length `m`) and `recon_values` (length `n`)
 * are read only for [`RdpcDivergence::Wasserstein1`].
 *
 * On `RDPC_STATUS_OK` writes the rate in bits, the certified gap and, when
 * `out_channel` is non-null, the `m × n` channel. An empty feasible set
 * returns `RDPC_STATUS_INFEASIBLE`; an uncertified solve returns
 * `RDPC_STATUS_MAX_ITERATIONS` with the outputs still written.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; outputs must be writable.
 */
enum RdpcStatus rdpc_rdpf_solve(const double *source,
                                size_t m,
                                const double *distortion,
                                size_t n,
                                enum RdpcDivergence divergence,
                                const double *source_values,
                                const double *recon_values,
                                double theta_d,
                                double theta_div,
                                double tolerance,
                                double *out_rate_bits,
                                double *out_gap_bits,
                                double *out_channel);

/**
 * Creates a codec for the `m × n` channel `channel` on source `source`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `out` must be writable.
 */
enum RdpcStatus rdpc_codec_new(const double *channel,
                               size_t m,
                               size_t n,
                               const double *source,
                               struct RdpcCodec **out);

/**
 * Sets the candidate budget per encoded symbol.
 *
 * # Safety
 * `codec` must come from [`rdpc_codec_new`] and not be freed.
 */
enum RdpcStatus rdpc_codec_set_budget(struct RdpcCodec *codec, uint64_t budget);

/**
 * Encodes input symbol `x` with common randomness `(seed, sample_index)`.
 *
 * # Safety
 * `codec` must be live; `out_k` must be writable.
 */
enum RdpcStatus rdpc_codec_encode(const struct RdpcCodec *codec,
                                  size_t x,
                                  uint64_t seed,
                                  uint64_t sample_index,
                                  uint64_t *out_k);

/**
 * Decodes index `k` to a reconstruction symbol.
 *
 * # Safety
 * `codec` must be live; `out_y` must be writable.
 */
enum RdpcStatus rdpc_codec_decode(const struct RdpcCodec *codec,
                                  uint64_t k,
                                  uint64_t seed,
                                  uint64_t sample_index,
                                  size_t *out_y);

/**
 * # Safety
 * `codec` must be null or come from [`rdpc_codec_new`], freed once.
 */
void rdpc_codec_free(struct RdpcCodec *codec);

/**
 * Serializes `len` indices into the container format.
 *
 * # Safety
 * `indices` must be valid for `len` reads (may be null when `len` is 0);
 * `out` must be writable.
 */
enum RdpcStatus rdpc_stream_write(const uint64_t *indices,
                                  size_t len,
                                  uint64_t seed,
                                  uint16_t block_size,
                                  struct RdpcBuffer *out);

/**
 * # Safety
 * `buffer` must come from [`rdpc_stream_write`] and be freed once.
 */
void rdpc_buffer_free(struct RdpcBuffer buffer);

/**
 * Parses a container.
 *
 * # Safety
 * `bytes` must be valid for `len` reads; `out` must be writable.
 */
enum RdpcStatus rdpc_stream_read(const uint8_t *bytes, size_t len, struct RdpcStream **out);

/**
 * Number of indices in a parsed container.
 *
 * # Safety
 * `stream` must be live.
 */
size_t rdpc_stream_len(const struct RdpcStream *stream);

/**
 * Borrowed pointer to the indices, valid until the stream is freed.
 *
 * # Safety
 * `stream` must be live.
 */
const uint64_t *rdpc_stream_indices(const struct RdpcStream *stream);

/**
 * # Safety
 * `stream` must be live.
 */
uint64_t rdpc_stream_seed(const struct RdpcStream *stream);

/**
 * # Safety
 * `stream` must be live.
 */
uint16_t rdpc_stream_block_size(const struct RdpcStream *stream);

/**
 * # Safety
 * `stream` must be null or come from [`rdpc_stream_read`], freed once.
 */
void rdpc_stream_free(struct RdpcStream *stream);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RDPC_H */
