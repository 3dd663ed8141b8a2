// The reference coder behind the native C boundary.  Used to exercise the
// dynamic loading path and the boundary contract in tests.
#include <cstring>
#include <new>

#include "lumen/errors.hpp"
#include "lumen/native.hpp"
#include "lumen/native_coder.h"
#include "lumen/rans.hpp"

struct lumen_coder {
  lumen::CdfTableSet tables;
};

namespace {

int32_t status_of(const std::exception& e) {
  if (dynamic_cast<const lumen::DecodeError*>(&e)) return LUMEN_ERR_TRUNCATED;
  if (dynamic_cast<const lumen::ArgumentError*>(&e)) return LUMEN_ERR_TABLE_ID;
  if (dynamic_cast<const lumen::FormatError*>(&e)) return LUMEN_ERR_INVALID_TABLE;
  return LUMEN_ERR_INTERNAL;
}

}  // namespace

extern "C" {

uint32_t lumen_native_abi_version(void) { return LUMEN_NATIVE_ABI_VERSION; }

int32_t lumen_coder_create(const int32_t* cdfs, size_t cdfs_len, const int32_t* lengths,
                           const int32_t* offsets, size_t num_tables, int32_t precision,
                           lumen_coder** out) {
  if (out == nullptr || (cdfs_len > 0 && cdfs == nullptr) ||
      (num_tables > 0 && (lengths == nullptr || offsets == nullptr))) {
    return LUMEN_ERR_INVALID_ARGUMENT;
  }
  try {
    auto* coder = new lumen_coder{lumen::CdfTableSet::from_flat(
        {cdfs, cdfs_len}, {lengths, num_tables}, {offsets, num_tables}, precision)};
    *out = coder;
    return LUMEN_OK;
  } catch (const std::bad_alloc&) {
    return LUMEN_ERR_INTERNAL;
  } catch (const std::exception&) {
    return LUMEN_ERR_INVALID_TABLE;
  }
}

void lumen_coder_destroy(lumen_coder* coder) { delete coder; }

size_t lumen_encode_bound(size_t n) { return lumen::reference_encode_bound(n); }

int32_t lumen_encode(const lumen_coder* coder, const int32_t* symbols, const int32_t* table_ids,
                     size_t n, uint8_t* out, size_t out_cap, size_t* out_len) {
  if (coder == nullptr || out_len == nullptr || (n > 0 && (symbols == nullptr || table_ids == nullptr))) {
    return LUMEN_ERR_INVALID_ARGUMENT;
  }
  try {
    const auto bytes = lumen::rans_encode({symbols, n}, {table_ids, n}, coder->tables);
    *out_len = bytes.size();
    if (bytes.size() > out_cap || out == nullptr) return LUMEN_ERR_BUFFER_TOO_SMALL;
    std::memcpy(out, bytes.data(), bytes.size());
    return LUMEN_OK;
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

int32_t lumen_decode(const lumen_coder* coder, const uint8_t* stream, size_t stream_len,
                     const int32_t* table_ids, size_t n, int32_t* out_symbols) {
  if (coder == nullptr || (stream_len > 0 && stream == nullptr) ||
      (n > 0 && (table_ids == nullptr || out_symbols == nullptr))) {
    return LUMEN_ERR_INVALID_ARGUMENT;
  }
  try {
    const auto symbols = lumen::rans_decode({stream, stream_len}, {table_ids, n}, coder->tables, n);
    std::memcpy(out_symbols, symbols.data(), n * sizeof(int32_t));
    return LUMEN_OK;
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

}  // extern "C"
