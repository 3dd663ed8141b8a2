/* C boundary implemented by the optional native rANS coder library.
 *
 * The library is discovered at run time through the LUMEN_NATIVE_CODER
 * environment variable (path to a shared object exporting the functions
 * below).  Output must be byte-identical to the reference coder in
 * lumen/rans.hpp.  Every failure is reported through a status code; no call
 * may abort on malformed input.
 *
 * Tables are passed flattened: `cdfs` holds the tables back to back, table t
 * having lengths[t] + 1 entries; offsets[t] is the value coded by slot 0 and
 * the last slot of each table is the bypass escape.
 */
#ifndef LUMEN_NATIVE_CODER_H_
#define LUMEN_NATIVE_CODER_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define LUMEN_NATIVE_ABI_VERSION 1u

enum lumen_status {
  LUMEN_OK = 0,
  LUMEN_ERR_INVALID_ARGUMENT = 1,
  LUMEN_ERR_INVALID_TABLE = 2,
  LUMEN_ERR_TABLE_ID = 3,
  LUMEN_ERR_BUFFER_TOO_SMALL = 4,
  LUMEN_ERR_TRUNCATED = 5,
  LUMEN_ERR_DESYNC = 6,
  LUMEN_ERR_INTERNAL = 7
};

typedef struct lumen_coder lumen_coder;

uint32_t lumen_native_abi_version(void);

/* Validates and copies the tables into an immutable handle. */
int32_t lumen_coder_create(const int32_t* cdfs, size_t cdfs_len,
                           const int32_t* lengths, const int32_t* offsets,
                           size_t num_tables, int32_t precision,
                           lumen_coder** out);

void lumen_coder_destroy(lumen_coder* coder);

/* Upper bound on the encoded size of n symbols. */
size_t lumen_encode_bound(size_t n);

int32_t lumen_encode(const lumen_coder* coder, const int32_t* symbols,
                     const int32_t* table_ids, size_t n, uint8_t* out,
                     size_t out_cap, size_t* out_len);

int32_t lumen_decode(const lumen_coder* coder, const uint8_t* stream,
                     size_t stream_len, const int32_t* table_ids, size_t n,
                     int32_t* out_symbols);

#ifdef __cplusplus
}
#endif

#endif /* LUMEN_NATIVE_CODER_H_ */
