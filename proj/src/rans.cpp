#include "lumen/rans.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lumen/errors.hpp"

namespace lumen {
namespace {

// Largest bypass magnitude is < 2^32, i.e. at most 8 four-bit chunks.
constexpr int kMaxBypassChunks = 8;

const CdfTable& checked_table(const CdfTableSet& tables, int table_id) {
  if (table_id < 0 || static_cast<size_t>(table_id) >= tables.size()) {
    throw ArgumentError("rANS table id out of range: " + std::to_string(table_id));
  }
  return tables[table_id];
}

// Distance past the support edge, and whether the value lies below it.
std::pair<uint64_t, bool> bypass_magnitude(int32_t value, const CdfTable& t) {
  if (value < t.min_value()) {
    return {static_cast<uint64_t>(int64_t{t.min_value()} - 1 - value), true};
  }
  return {static_cast<uint64_t>(int64_t{value} - t.max_value() - 1), false};
}

int bypass_chunks(uint64_t magnitude) {
  int chunks = 1;
  while (magnitude >>= kBypassChunkBits) ++chunks;
  return chunks;
}

}  // namespace

RansEncoder::RansEncoder(const CdfTableSet& tables) : tables_(tables) {}

void RansEncoder::put_raw(uint32_t bits, int nbits) {
  const int shift = tables_.precision - nbits;
  ops_.push_back({bits << shift, 1u << shift});
}

void RansEncoder::put(int32_t value, int table_id) {
  const CdfTable& t = checked_table(tables_, table_id);
  if (value >= t.min_value() && value <= t.max_value()) {
    const int slot = value - t.offset;
    ops_.push_back({t.cdf[slot], t.freq(slot)});
    return;
  }
  const int esc = t.escape_slot();
  ops_.push_back({t.cdf[esc], t.freq(esc)});
  auto [magnitude, below] = bypass_magnitude(value, t);
  put_raw(below ? 1 : 0, 1);
  do {
    put_raw(static_cast<uint32_t>(magnitude & ((1u << kBypassChunkBits) - 1)),
            kBypassChunkBits);
    magnitude >>= kBypassChunkBits;
    put_raw(magnitude != 0 ? 1 : 0, 1);
  } while (magnitude != 0);
}

std::vector<uint8_t> RansEncoder::finish() {
  const int prec = tables_.precision;
  std::vector<uint8_t> out;
  out.reserve(ops_.size() / 2 + 8);
  uint32_t x = kRansLowerBound;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    const uint32_t x_max = ((kRansLowerBound >> prec) << 8) * it->freq;
    while (x >= x_max) {
      out.push_back(static_cast<uint8_t>(x & 0xff));
      x >>= 8;
    }
    x = ((x / it->freq) << prec) + (x % it->freq) + it->start;
  }
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<uint8_t>(x & 0xff));
    x >>= 8;
  }
  std::reverse(out.begin(), out.end());
  ops_.clear();
  return out;
}

RansDecoder::RansDecoder(std::span<const uint8_t> stream,
                         const CdfTableSet& tables)
    : stream_(stream), tables_(tables) {
  if (stream.size() < 4) throw DecodeError("rANS stream truncated (no state)");
  state_ = (uint32_t{stream[0]} << 24) | (uint32_t{stream[1]} << 16) |
           (uint32_t{stream[2]} << 8) | uint32_t{stream[3]};
  pos_ = 4;
  if (state_ < kRansLowerBound || state_ >= (kRansLowerBound << 8)) {
    throw DecodeError("rANS stream has an invalid initial state");
  }
}

uint32_t RansDecoder::decode_slot(const CdfTable& table) {
  const uint32_t mask = (1u << tables_.precision) - 1;
  const uint32_t cum = state_ & mask;
  auto it = std::upper_bound(table.cdf.begin(), table.cdf.end(), cum);
  const int slot = static_cast<int>(it - table.cdf.begin()) - 1;
  advance(table.cdf[slot], table.freq(slot));
  return static_cast<uint32_t>(slot);
}

void RansDecoder::advance(uint32_t start, uint32_t freq) {
  const int prec = tables_.precision;
  const uint32_t mask = (1u << prec) - 1;
  state_ = freq * (state_ >> prec) + (state_ & mask) - start;
  while (state_ < kRansLowerBound) {
    if (pos_ >= stream_.size()) throw DecodeError("rANS stream truncated");
    state_ = (state_ << 8) | stream_[pos_++];
  }
}

uint32_t RansDecoder::get_raw(int nbits) {
  const int shift = tables_.precision - nbits;
  const uint32_t bits = (state_ & ((1u << tables_.precision) - 1)) >> shift;
  advance(bits << shift, 1u << shift);
  return bits;
}

int32_t RansDecoder::get(int table_id) {
  const CdfTable& t = checked_table(tables_, table_id);
  const int slot = static_cast<int>(decode_slot(t));
  if (slot != t.escape_slot()) return t.offset + slot;

  const bool below = get_raw(1) != 0;
  uint64_t magnitude = 0;
  for (int chunk = 0;; ++chunk) {
    if (chunk == kMaxBypassChunks) throw DecodeError("rANS bypass value overflow");
    magnitude |= uint64_t{get_raw(kBypassChunkBits)} << (chunk * kBypassChunkBits);
    if (get_raw(1) == 0) break;
  }
  const int64_t value = below ? int64_t{t.min_value()} - 1 - static_cast<int64_t>(magnitude)
                              : int64_t{t.max_value()} + 1 + static_cast<int64_t>(magnitude);
  if (value < INT32_MIN || value > INT32_MAX) {
    throw DecodeError("rANS bypass value out of range");
  }
  return static_cast<int32_t>(value);
}

void RansDecoder::finish() const {
  if (state_ != kRansLowerBound || pos_ != stream_.size()) {
    throw DecodeError("rANS stream desynchronised (final state check failed)");
  }
}

std::vector<uint8_t> rans_encode(std::span<const int32_t> symbols,
                                 std::span<const int32_t> table_ids,
                                 const CdfTableSet& tables) {
  if (symbols.size() != table_ids.size()) {
    throw ArgumentError("rans_encode: symbols/table_ids length mismatch");
  }
  RansEncoder enc(tables);
  for (size_t i = 0; i < symbols.size(); ++i) enc.put(symbols[i], table_ids[i]);
  return enc.finish();
}

std::vector<int32_t> rans_decode(std::span<const uint8_t> stream,
                                 std::span<const int32_t> table_ids,
                                 const CdfTableSet& tables, size_t n) {
  if (table_ids.size() != n) {
    throw ArgumentError("rans_decode: table_ids length must equal n");
  }
  RansDecoder dec(stream, tables);
  std::vector<int32_t> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = dec.get(table_ids[i]);
  dec.finish();
  return out;
}

double rans_symbol_cost(int32_t value, const CdfTable& table, int precision) {
  const double total = std::ldexp(1.0, precision);
  if (value >= table.min_value() && value <= table.max_value()) {
    return -std::log2(table.freq(value - table.offset) / total);
  }
  const auto [magnitude, below] = bypass_magnitude(value, table);
  (void)below;
  const int chunks = bypass_chunks(magnitude);
  return -std::log2(table.freq(table.escape_slot()) / total) + 1.0 +
         chunks * (kBypassChunkBits + 1.0);
}

}  // namespace lumen
