#pragma once

#include <random>
#include <vector>

#include "lumen/cdf.hpp"

namespace lumen::testing {

// Random table set: skewed PMFs of 2..max_support in-support values plus an
// escape slot, random offsets.
inline CdfTableSet random_tables(std::mt19937_64& rng, int count, int max_support = 64) {
  CdfTableSet set;
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> skew(0.5, 4.0);
  for (int t = 0; t < count; ++t) {
    const int n = 2 + static_cast<int>(rng() % (max_support - 1));
    const double power = skew(rng);
    std::vector<double> pmf(n);
    double sum = 0.0;
    for (double& v : pmf) sum += v = std::pow(e(rng), power);
    for (double& v : pmf) v = v / sum * 0.999;
    const int32_t offset = static_cast<int32_t>(rng() % 41) - 20 - n / 2;
    set.tables.push_back(table_from_support_pmf(pmf, offset));
  }
  return set;
}

// Draws a value from a table's quantized distribution; the escape slot is
// replaced by a value outside the support (either side, random distance).
inline int32_t sample_value(std::mt19937_64& rng, const CdfTable& t, int precision = 16) {
  const uint32_t r = static_cast<uint32_t>(rng() & ((1u << precision) - 1));
  int slot = 0;
  while (t.cdf[slot + 1] <= r) ++slot;
  if (slot != t.escape_slot()) return t.offset + slot;
  const int32_t dist = 1 + static_cast<int32_t>(rng() % 1000);
  return (rng() & 1) ? t.max_value() + dist : t.min_value() - dist;
}

}  // namespace lumen::testing
