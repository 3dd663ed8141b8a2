#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lumen/cdf.hpp"

namespace lumen {

// Reference rANS coder: 32-bit state kept in [2^16, 2^24), byte-wise
// renormalisation, CDF precision from the table set (16 bits in practice).
// Encoding runs over the symbols in reverse so the decoder reads forward.
//
// Stream layout: 4-byte big-endian final encoder state, then renormalisation
// bytes in decode order.  Values outside a table's support are coded as the
// escape slot followed by raw bits: one direction bit (1 = below support),
// then the distance past the support edge in 4-bit chunks, least significant
// first, each chunk followed by a continuation bit.
inline constexpr uint32_t kRansLowerBound = 1u << 16;
inline constexpr int kBypassChunkBits = 4;

class RansEncoder {
 public:
  explicit RansEncoder(const CdfTableSet& tables);

  // Queues `value` under table `table_id`; throws ArgumentError for a bad id.
  void put(int32_t value, int table_id);

  // Entropy-codes everything queued so far and resets the encoder.
  std::vector<uint8_t> finish();

 private:
  struct Op {
    uint32_t start;
    uint32_t freq;
  };
  void put_raw(uint32_t bits, int nbits);

  const CdfTableSet& tables_;
  std::vector<Op> ops_;
};

class RansDecoder {
 public:
  // Throws DecodeError when the stream is too short to hold a state.
  RansDecoder(std::span<const uint8_t> stream, const CdfTableSet& tables);

  int32_t get(int table_id);

  // Verifies the decoder returned to the initial encoder state and consumed
  // every byte; throws DecodeError otherwise.
  void finish() const;

 private:
  uint32_t get_raw(int nbits);
  uint32_t decode_slot(const CdfTable& table);
  void advance(uint32_t start, uint32_t freq);

  std::span<const uint8_t> stream_;
  const CdfTableSet& tables_;
  size_t pos_ = 0;
  uint32_t state_ = 0;
};

std::vector<uint8_t> rans_encode(std::span<const int32_t> symbols,
                                 std::span<const int32_t> table_ids,
                                 const CdfTableSet& tables);

// Decodes exactly n symbols and checks the final state.
std::vector<int32_t> rans_decode(std::span<const uint8_t> stream,
                                 std::span<const int32_t> table_ids,
                                 const CdfTableSet& tables, size_t n);

// Ideal code length, in bits, of `value` under `table`: -log2 of the
// quantized slot probability plus any raw bypass bits.
double rans_symbol_cost(int32_t value, const CdfTable& table, int precision);

}  // namespace lumen
