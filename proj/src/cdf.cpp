#include "lumen/cdf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "lumen/errors.hpp"

namespace lumen {

void CdfTableSet::validate() const {
  if (precision < 1 || precision > 16) {
    throw FormatError("CDF precision must be in [1,16]");
  }
  const uint32_t total = 1u << precision;
  for (size_t t = 0; t < tables.size(); ++t) {
    const auto& cdf = tables[t].cdf;
    if (cdf.size() < 3) {
      throw FormatError("CDF table " + std::to_string(t) + " has < 2 slots");
    }
    if (cdf.front() != 0 || cdf.back() != total) {
      throw FormatError("CDF table " + std::to_string(t) + " has wrong bounds");
    }
    for (size_t i = 1; i < cdf.size(); ++i) {
      if (cdf[i] <= cdf[i - 1]) {
        throw FormatError("CDF table " + std::to_string(t) +
                          " is not strictly increasing");
      }
    }
  }
}

CdfTableSet::Flat CdfTableSet::flatten() const {
  Flat flat;
  for (const auto& t : tables) {
    flat.cdfs.insert(flat.cdfs.end(), t.cdf.begin(), t.cdf.end());
    flat.lengths.push_back(t.length());
    flat.offsets.push_back(t.offset);
  }
  return flat;
}

CdfTableSet CdfTableSet::from_flat(std::span<const int32_t> cdfs,
                                   std::span<const int32_t> lengths,
                                   std::span<const int32_t> offsets,
                                   int precision) {
  if (lengths.size() != offsets.size()) {
    throw FormatError("CDF lengths/offsets size mismatch");
  }
  CdfTableSet set;
  set.precision = precision;
  size_t pos = 0;
  for (size_t t = 0; t < lengths.size(); ++t) {
    if (lengths[t] < 2) throw FormatError("CDF table with < 2 slots");
    const size_t n = static_cast<size_t>(lengths[t]) + 1;
    if (pos + n > cdfs.size()) throw FormatError("CDF buffer too short");
    CdfTable table;
    table.offset = offsets[t];
    for (size_t i = 0; i < n; ++i) {
      if (cdfs[pos + i] < 0) throw FormatError("negative CDF entry");
      table.cdf.push_back(static_cast<uint32_t>(cdfs[pos + i]));
    }
    pos += n;
    set.tables.push_back(std::move(table));
  }
  if (pos != cdfs.size()) throw FormatError("trailing CDF entries");
  set.validate();
  return set;
}

std::vector<uint32_t> quantize_pmf(std::span<const double> pmf, int precision) {
  const size_t n = pmf.size();
  if (n == 0) throw ArgumentError("quantize_pmf: empty PMF");
  const int64_t total = int64_t{1} << precision;
  if (static_cast<int64_t>(n) > total) {
    throw ArgumentError("quantize_pmf: more symbols than precision allows");
  }

  std::vector<double> p(pmf.begin(), pmf.end());
  for (double& v : p) v = std::isfinite(v) ? std::max(v, 0.0) : 0.0;
  double sum = std::accumulate(p.begin(), p.end(), 0.0);
  if (sum <= 0.0) {
    std::fill(p.begin(), p.end(), 1.0);
    sum = static_cast<double>(n);
  }
  std::vector<double> target(n);
  std::vector<int64_t> freq(n);
  int64_t assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    target[i] = p[i] / sum * static_cast<double>(total);
    freq[i] = std::max<int64_t>(1, std::llround(target[i]));
    assigned += freq[i];
  }

  // (error, -index): largest error first, lowest index on ties.
  using Entry = std::pair<double, int64_t>;
  if (assigned < total) {
    std::priority_queue<Entry> heap;
    for (size_t i = 0; i < n; ++i) {
      heap.push({target[i] - freq[i], -static_cast<int64_t>(i)});
    }
    for (; assigned < total; ++assigned) {
      const size_t i = static_cast<size_t>(-heap.top().second);
      heap.pop();
      ++freq[i];
      heap.push({target[i] - freq[i], -static_cast<int64_t>(i)});
    }
  } else if (assigned > total) {
    // Mass stealing: only symbols above the floor of 1 may give.
    std::priority_queue<Entry> heap;
    for (size_t i = 0; i < n; ++i) {
      if (freq[i] > 1) heap.push({freq[i] - target[i], -static_cast<int64_t>(i)});
    }
    for (; assigned > total; --assigned) {
      const size_t i = static_cast<size_t>(-heap.top().second);
      heap.pop();
      --freq[i];
      if (freq[i] > 1) heap.push({freq[i] - target[i], -static_cast<int64_t>(i)});
    }
  }

  std::vector<uint32_t> cdf(n + 1, 0);
  for (size_t i = 0; i < n; ++i) {
    cdf[i + 1] = cdf[i] + static_cast<uint32_t>(freq[i]);
  }
  return cdf;
}

CdfTable table_from_support_pmf(std::span<const double> pmf, int32_t offset,
                                int precision) {
  std::vector<double> full(pmf.begin(), pmf.end());
  double in_support = 0.0;
  for (double v : full) in_support += std::max(v, 0.0);
  full.push_back(std::max(1.0 - in_support, 0.0));
  CdfTable table;
  table.cdf = quantize_pmf(full, precision);
  table.offset = offset;
  return table;
}

const std::vector<double>& gaussian_scale_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kNumScaleBins);
    const double lo = std::log(kScaleMin), hi = std::log(kScaleMax);
    for (int i = 0; i < kNumScaleBins; ++i) {
      t[i] = std::exp(lo + (hi - lo) * i / (kNumScaleBins - 1));
    }
    t.front() = kScaleMin;
    t.back() = kScaleMax;
    return t;
  }();
  return table;
}

int scale_bin(double sigma) {
  const auto& t = gaussian_scale_table();
  auto it = std::lower_bound(t.begin(), t.end(), sigma);
  if (it == t.end()) return kNumScaleBins - 1;
  return static_cast<int>(it - t.begin());
}

double discrete_gaussian_pmf(int k, double sigma) {
  // Phi(a) - Phi(b) via erfc on the tail side for accuracy.
  const double a = (std::abs(k) + 0.5) / sigma;
  const double b = (std::abs(k) - 0.5) / sigma;
  return 0.5 * (std::erfc(b / std::sqrt(2.0)) - std::erfc(a / std::sqrt(2.0)));
}

int gaussian_half_support(double sigma, int precision) {
  int half = std::min(static_cast<int>(std::ceil(kTailStddevs * sigma)),
                      kMaxHalfSupport);
  // Slots below half a quantum would be forced up to one quantum, with the
  // excess stolen from the central slots; they go to the escape instead.
  const double quantum = std::ldexp(1.0, -precision);
  while (half > 0 && discrete_gaussian_pmf(half, sigma) < 0.5 * quantum) --half;
  return half;
}

CdfTableSet build_gaussian_tables(int precision) {
  CdfTableSet set;
  set.precision = precision;
  for (double sigma : gaussian_scale_table()) {
    const int half = gaussian_half_support(sigma, precision);
    std::vector<double> pmf(2 * half + 1);
    for (int k = -half; k <= half; ++k) pmf[k + half] = discrete_gaussian_pmf(k, sigma);
    set.tables.push_back(table_from_support_pmf(pmf, -half, precision));
  }
  return set;
}

}  // namespace lumen
