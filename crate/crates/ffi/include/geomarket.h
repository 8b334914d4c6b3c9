#ifndef GEOMARKET_H
#define GEOMARKET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of a fallible call.
 */
typedef enum GmStatus {
  GM_STATUS_OK = 0,
  GM_STATUS_NULL_POINTER = 1,
  GM_STATUS_INVALID_ARGUMENT = 2,
  GM_STATUS_OUT_OF_DOMAIN = 3,
  GM_STATUS_NOT_ALIGNED = 4,
  GM_STATUS_CRYPTO_FAILURE = 5,
  GM_STATUS_INTERNAL = 6,
} GmStatus;

/**
 * Grid-domain parameters.
 */
typedef struct GmDomainParams GmDomainParams;

/**
 * An asymmetric matching deployment: group parameters, key pair, and the
 * ciphertext flat file.
 */
typedef struct GmHveSystem GmHveSystem;

/**
 * A symmetric searchable index together with its secret keys.
 */
typedef struct GmSseIndex GmSseIndex;

/**
 * A commitment together with the aux data needed to open positions.
 */
typedef struct GmVcCommitment GmVcCommitment;

/**
 * Commitment public parameters.
 */
typedef struct GmVcParams GmVcParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread, or NULL.
 * Release with [`gm_string_free`].
 */
char *gm_last_error_message(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a function in this library and not yet
 * freed.
 */
void gm_string_free(char *s);

/**
 * Release a byte buffer returned by this library.
 *
 * # Safety
 * `(ptr, len)` must be a pair returned by a function in this library and
 * not yet freed.
 */
void gm_bytes_free(uint8_t *ptr, uintptr_t len);

/**
 * Create domain parameters for an `l x l` grid (`l` a power of two) over
 * the given bounding box. Returns NULL on invalid input.
 */
struct GmDomainParams *gm_domain_params_new(uint32_t l,
                                            uint8_t h_max,
                                            double min_lat,
                                            double max_lat,
                                            double min_lon,
                                            double max_lon);

/**
 * # Safety
 * `params` must be a live handle from [`gm_domain_params_new`].
 */
void gm_domain_params_free(struct GmDomainParams *params);

/**
 * Snap a coordinate to its grid cell.
 *
 * # Safety
 * `params` must be a live handle; `x_out`/`y_out` must be writable.
 */
enum GmStatus gm_snap_to_grid(const struct GmDomainParams *params,
                              double lat,
                              double lon,
                              uint32_t *x_out,
                              uint32_t *y_out);

/**
 * Keyword set of a grid cell as a JSON array of strings; NULL on error.
 *
 * # Safety
 * `params` must be a live handle.
 */
char *gm_object_keywords_json(const struct GmDomainParams *params, uint32_t x, uint32_t y);

/**
 * Conjunctive keyword pairs covering a rectangle, as a JSON array of
 * two-element arrays; NULL on error.
 *
 * # Safety
 * `params` must be a live handle.
 */
char *gm_range_decompose_json(const struct GmDomainParams *params,
                              uint32_t x_lo,
                              uint32_t x_hi,
                              uint32_t y_lo,
                              uint32_t y_hi);

/**
 * Per-level scalar values of a cell as a JSON array of
 * `{"level": n, "value": v}` records; NULL on error.
 *
 * # Safety
 * `params` must be a live handle.
 */
char *gm_level_values_json(const struct GmDomainParams *params, uint32_t x, uint32_t y);

/**
 * Scalar and level of a square node-aligned query range.
 *
 * # Safety
 * `params` must be a live handle; `value_out`/`level_out` must be
 * writable.
 */
enum GmStatus gm_query_level_value(const struct GmDomainParams *params,
                                   uint32_t x_lo,
                                   uint32_t x_hi,
                                   uint32_t y_lo,
                                   uint32_t y_hi,
                                   uint64_t *value_out,
                                   uint8_t *level_out);

/**
 * Create an empty keyed index. `security_bits` is 128 or 256; the seed
 * makes key generation reproducible.
 */
struct GmSseIndex *gm_sse_index_new(uint32_t security_bits,
                                    const uint8_t *seed,
                                    uintptr_t seed_len);

/**
 * # Safety
 * `handle` must be a live handle from [`gm_sse_index_new`].
 */
void gm_sse_index_free(struct GmSseIndex *handle);

/**
 * Index an object at a grid cell. `oid` points to 16 bytes.
 *
 * # Safety
 * `handle` and `params` must be live handles; `oid` must point to 16
 * readable bytes.
 */
enum GmStatus gm_sse_index_insert(struct GmSseIndex *handle,
                                  const struct GmDomainParams *params,
                                  const uint8_t *oid,
                                  uint32_t x,
                                  uint32_t y);

/**
 * Evaluate an encrypted range query; returns a JSON array of matching
 * object ids in hex, or NULL on error.
 *
 * # Safety
 * `handle` and `params` must be live handles.
 */
char *gm_sse_range_query_json(const struct GmSseIndex *handle,
                              const struct GmDomainParams *params,
                              uint32_t x_lo,
                              uint32_t x_hi,
                              uint32_t y_lo,
                              uint32_t y_hi);

/**
 * Serialize the encrypted index container into a fresh buffer.
 *
 * # Safety
 * `handle` must be a live handle; `out`/`out_len` must be writable.
 */
enum GmStatus gm_sse_index_serialize(const struct GmSseIndex *handle,
                                     uint8_t **out,
                                     uintptr_t *out_len);

/**
 * Create a deployment with a fresh composite-order group of the given
 * size (at least 32 bits; 128 is the tested desk-scale default).
 */
struct GmHveSystem *gm_hve_system_new(uint32_t group_bits, const uint8_t *seed, uintptr_t seed_len);

/**
 * # Safety
 * `handle` must be a live handle from [`gm_hve_system_new`].
 */
void gm_hve_system_free(struct GmHveSystem *handle);

/**
 * Encrypt an object's cell into the flat file (one ciphertext per tree
 * level).
 *
 * # Safety
 * `handle` and `params` must be live handles; `oid` must point to 16
 * readable bytes.
 */
enum GmStatus gm_hve_add_object(struct GmHveSystem *handle,
                                const struct GmDomainParams *params,
                                const uint8_t *oid,
                                uint32_t x,
                                uint32_t y);

/**
 * Issue a token for a square node-aligned range and scan the flat file
 * with `workers` threads; returns a JSON array of matching object ids in
 * hex, or NULL on error.
 *
 * # Safety
 * `handle` and `params` must be live handles.
 */
char *gm_hve_query_json(struct GmHveSystem *handle,
                        const struct GmDomainParams *params,
                        uint32_t x_lo,
                        uint32_t x_hi,
                        uint32_t y_lo,
                        uint32_t y_hi,
                        uint32_t workers);

/**
 * Generate commitment parameters for batches of up to `capacity`
 * messages under a modulus of `modulus_bits` (at least 128).
 */
struct GmVcParams *gm_vc_params_new(uint32_t modulus_bits,
                                    uintptr_t capacity,
                                    const uint8_t *seed,
                                    uintptr_t seed_len);

/**
 * # Safety
 * `params` must be a live handle from [`gm_vc_params_new`].
 */
void gm_vc_params_free(struct GmVcParams *params);

/**
 * Commit to `count` messages given as packed coordinate words and 16-byte
 * object ids. Returns NULL on error.
 *
 * # Safety
 * `params` must be a live handle; `coord_words` must point to `count`
 * u64 values and `oids` to `16 * count` bytes.
 */
struct GmVcCommitment *gm_vc_commit(const struct GmVcParams *params,
                                    const uint64_t *coord_words,
                                    const uint8_t *oids,
                                    uintptr_t count,
                                    const uint8_t *seed,
                                    uintptr_t seed_len);

/**
 * # Safety
 * `commitment` must be a live handle from [`gm_vc_commit`].
 */
void gm_vc_commitment_free(struct GmVcCommitment *commitment);

/**
 * The commitment string (fixed width, modulus bytes).
 *
 * # Safety
 * `commitment` must be a live handle; `out`/`out_len` must be writable.
 */
enum GmStatus gm_vc_commitment_bytes(const struct GmVcCommitment *commitment,
                                     uint8_t **out,
                                     uintptr_t *out_len);

/**
 * Produce the opening proof for one position.
 *
 * # Safety
 * `params` and `commitment` must be live handles; `out`/`out_len` must be
 * writable.
 */
enum GmStatus gm_vc_open(const struct GmVcParams *params,
                         const struct GmVcCommitment *commitment,
                         uintptr_t index,
                         uint8_t **out,
                         uintptr_t *out_len);

/**
 * Verify a positional opening: 1 accepted, 0 rejected, negative on
 * argument errors.
 *
 * # Safety
 * `params` must be a live handle; `cc` and `proof` must point to buffers
 * of the given lengths; `oid` must point to 16 readable bytes.
 */
int32_t gm_vc_verify(const struct GmVcParams *params,
                     const uint8_t *cc,
                     uintptr_t cc_len,
                     uint64_t coord_word,
                     const uint8_t *oid,
                     uintptr_t index,
                     const uint8_t *proof,
                     uintptr_t proof_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEOMARKET_H */
