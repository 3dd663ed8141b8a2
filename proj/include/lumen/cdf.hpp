#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lumen {

inline constexpr int kCdfPrecision = 16;

// Quantized cumulative distribution over `length()` consecutive symbol slots.
// Slot i codes the value offset + i, except the last slot, which is the
// escape for values outside the table support (coded in bypass mode).
struct CdfTable {
  std::vector<uint32_t> cdf;  // length()+1 entries, cdf[0]=0, back()=2^precision
  int32_t offset = 0;

  int length() const { return static_cast<int>(cdf.size()) - 1; }
  int escape_slot() const { return length() - 1; }
  int32_t min_value() const { return offset; }
  int32_t max_value() const { return offset + length() - 2; }
  uint32_t freq(int slot) const { return cdf[slot + 1] - cdf[slot]; }
};

struct CdfTableSet {
  std::vector<CdfTable> tables;
  int precision = kCdfPrecision;

  size_t size() const { return tables.size(); }
  const CdfTable& operator[](size_t i) const { return tables[i]; }

  // Throws FormatError unless every table starts at 0, ends at 2^precision,
  // is strictly increasing, and has at least two slots.
  void validate() const;

  // Flat layout used by checkpoints and the native coder boundary.
  struct Flat {
    std::vector<int32_t> cdfs;     // concatenated tables
    std::vector<int32_t> lengths;  // slots per table (cdf has length+1 entries)
    std::vector<int32_t> offsets;
  };
  Flat flatten() const;
  static CdfTableSet from_flat(std::span<const int32_t> cdfs,
                               std::span<const int32_t> lengths,
                               std::span<const int32_t> offsets,
                               int precision = kCdfPrecision);
};

// Turns a real PMF into integer frequencies summing to 2^precision with every
// symbol >= 1; returns the cumulative table (pmf.size()+1 entries).  The PMF
// is renormalised first.  Rounding slack is assigned greedily to the symbols
// whose quantized mass is furthest from their real mass, which keeps
// per-symbol error within one quantum of rounding where that is feasible.
std::vector<uint32_t> quantize_pmf(std::span<const double> pmf,
                                   int precision = kCdfPrecision);

// Builds a coder table from the PMF of the in-support values
// [offset, offset + pmf.size()); the remaining mass 1 - sum(pmf) becomes the
// escape slot (floored so it always stays codable).
CdfTable table_from_support_pmf(std::span<const double> pmf, int32_t offset,
                                int precision = kCdfPrecision);

// ---- Gaussian conditional tables --------------------------------------------

inline constexpr int kNumScaleBins = 64;
inline constexpr double kScaleMin = 0.11;
inline constexpr double kScaleMax = 256.0;
inline constexpr double kTailStddevs = 9.0;
inline constexpr int kMaxHalfSupport = 128;

// kNumScaleBins log-spaced scales spanning [kScaleMin, kScaleMax].
const std::vector<double>& gaussian_scale_table();

// Smallest bin whose scale is >= sigma (clamped to the last bin).
int scale_bin(double sigma);

// Mass of the integer k under a zero-mean Gaussian discretised to unit bins.
double discrete_gaussian_pmf(int k, double sigma);

// Half-width of a scale bin's support: min(ceil(9 sigma), 128), trimmed to
// the values whose mass is at least half a quantum.
int gaussian_half_support(double sigma, int precision = kCdfPrecision);

// One table per scale bin over +-gaussian_half_support, plus the escape slot.
CdfTableSet build_gaussian_tables(int precision = kCdfPrecision);

}  // namespace lumen
