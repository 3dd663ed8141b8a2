#include <climits>
#include <random>

#include "doctest.h"
#include "lumen/errors.hpp"
#include "lumen/rans.hpp"
#include "test_support.hpp"

using namespace lumen;
using lumen::testing::random_tables;
using lumen::testing::sample_value;

TEST_CASE("empty sequence flushes only the state") {
  const CdfTableSet tables = build_gaussian_tables();
  const auto bytes = rans_encode({}, {}, tables);
  CHECK(bytes.size() == 4);
  CHECK(rans_decode(bytes, {}, tables, 0).empty());
}

TEST_CASE("round trip over random tables including bypass values") {
  std::mt19937_64 rng(1234);
  const CdfTableSet tables = random_tables(rng, 50);
  std::vector<int32_t> symbols, ids;
  for (int i = 0; i < 200000; ++i) {
    const int id = static_cast<int>(rng() % tables.size());
    ids.push_back(id);
    symbols.push_back(sample_value(rng, tables[id]));
  }
  // Extreme bypass magnitudes.
  for (int32_t v : {INT32_MIN, INT32_MAX, INT32_MIN + 1, -1000000, 1000000}) {
    ids.push_back(0);
    symbols.push_back(v);
  }
  const auto bytes = rans_encode(symbols, ids, tables);
  CHECK(rans_decode(bytes, ids, tables, symbols.size()) == symbols);
}

TEST_CASE("encoded length tracks the ideal code length") {
  std::mt19937_64 rng(77);
  const CdfTableSet tables = random_tables(rng, 20);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int32_t> symbols, ids;
    double ideal_bits = 0.0;
    const int id = static_cast<int>(rng() % tables.size());
    for (int i = 0; i < 100000; ++i) {
      ids.push_back(id);
      symbols.push_back(sample_value(rng, tables[id]));
      ideal_bits += rans_symbol_cost(symbols.back(), tables[id], tables.precision);
    }
    const double ideal_bytes = ideal_bits / 8.0;
    const double actual = static_cast<double>(rans_encode(symbols, ids, tables).size());
    CHECK(std::abs(actual - ideal_bytes) <= 0.01 * ideal_bytes + 8.0);
  }
}

TEST_CASE("streaming encoder matches the batch interface") {
  std::mt19937_64 rng(5);
  const CdfTableSet tables = random_tables(rng, 8);
  std::vector<int32_t> symbols, ids;
  RansEncoder enc(tables);
  for (int i = 0; i < 1000; ++i) {
    ids.push_back(static_cast<int>(rng() % 8));
    symbols.push_back(sample_value(rng, tables[ids.back()]));
    enc.put(symbols.back(), ids.back());
  }
  const auto streamed = enc.finish();
  CHECK(streamed == rans_encode(symbols, ids, tables));
  RansDecoder dec(streamed, tables);
  for (size_t i = 0; i < symbols.size(); ++i) CHECK(dec.get(ids[i]) == symbols[i]);
  CHECK_NOTHROW(dec.finish());
}

TEST_CASE("errors") {
  std::mt19937_64 rng(8);
  const CdfTableSet tables = random_tables(rng, 4);
  const std::vector<int32_t> sym = {1, 2, 3};
  const std::vector<int32_t> bad_ids = {0, 4, 1};
  CHECK_THROWS_AS(rans_encode(sym, bad_ids, tables), ArgumentError);
  CHECK_THROWS_AS(rans_encode(sym, std::vector<int32_t>{0, 1}, tables), ArgumentError);

  std::vector<int32_t> symbols, ids;
  for (int i = 0; i < 5000; ++i) {
    ids.push_back(static_cast<int>(rng() % 4));
    symbols.push_back(sample_value(rng, tables[ids.back()]));
  }
  auto bytes = rans_encode(symbols, ids, tables);
  CHECK_THROWS_AS(rans_decode(std::span(bytes).first(3), {}, tables, 0), DecodeError);
  CHECK_THROWS_AS(rans_decode(std::span(bytes).first(bytes.size() / 2), ids, tables, ids.size()),
                  DecodeError);
  // Decoding fewer symbols than were encoded fails the final state check.
  std::vector<int32_t> fewer(ids.begin(), ids.end() - 1);
  CHECK_THROWS_AS(rans_decode(bytes, fewer, tables, fewer.size()), DecodeError);
  std::vector<uint8_t> extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(rans_decode(extra, ids, tables, ids.size()), DecodeError);
}

TEST_CASE("corrupted streams never crash") {
  std::mt19937_64 rng(99);
  const CdfTableSet tables = random_tables(rng, 10);
  std::vector<int32_t> symbols, ids;
  for (int i = 0; i < 2000; ++i) {
    ids.push_back(static_cast<int>(rng() % 10));
    symbols.push_back(sample_value(rng, tables[ids.back()]));
  }
  const auto clean = rans_encode(symbols, ids, tables);
  int detected = 0, changed = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto bytes = clean;
    bytes[rng() % bytes.size()] ^= static_cast<uint8_t>(1 + rng() % 255);
    try {
      if (rans_decode(bytes, ids, tables, ids.size()) != symbols) ++changed;
    } catch (const DecodeError&) {
      ++detected;
    }
  }
  CHECK(detected + changed == 300);
  CHECK(detected > 0);
}
