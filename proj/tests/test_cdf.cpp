#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "lumen/cdf.hpp"
#include "lumen/errors.hpp"

using namespace lumen;

TEST_CASE("uniform PMF over four symbols quantizes exactly") {
  const std::vector<double> pmf(4, 0.25);
  CHECK(quantize_pmf(pmf) == std::vector<uint32_t>{0, 16384, 32768, 49152, 65536});
}

TEST_CASE("degenerate PMF keeps every symbol codable") {
  std::vector<double> pmf(10, 0.0);
  pmf[3] = 1.0;
  const auto cdf = quantize_pmf(pmf);
  CHECK(cdf.front() == 0);
  CHECK(cdf.back() == 65536);
  for (size_t i = 1; i < cdf.size(); ++i) CHECK(cdf[i] > cdf[i - 1]);
  CHECK(cdf[4] - cdf[3] == 65536 - 9);
}

TEST_CASE("quantize_pmf handles all-zero and non-finite input") {
  const std::vector<double> zeros(5, 0.0);
  const auto cdf = quantize_pmf(zeros);
  CHECK(cdf.back() == 65536);
  const std::vector<double> weird = {NAN, 1.0, INFINITY, -3.0};
  const auto cdf2 = quantize_pmf(weird);
  CHECK(cdf2.back() == 65536);
  CHECK(cdf2[2] - cdf2[1] == 65536 - 3);
  CHECK_THROWS_AS(quantize_pmf(std::vector<double>{}), ArgumentError);
  CHECK_THROWS_AS(quantize_pmf(std::vector<double>(20, 1.0), 4), ArgumentError);
}

TEST_CASE("scale table spans the declared range") {
  const auto& t = gaussian_scale_table();
  REQUIRE(t.size() == 64);
  CHECK(t.front() == 0.11);
  CHECK(t.back() == 256.0);
  for (size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
  CHECK(scale_bin(0.01) == 0);
  CHECK(scale_bin(0.11) == 0);
  CHECK(scale_bin(1e6) == 63);
  for (double s : {0.2, 1.0, 3.7, 100.0}) {
    const int b = scale_bin(s);
    CHECK(t[b] >= s);
    CHECK(t[b - 1] < s);
  }
}

TEST_CASE("discrete Gaussian PMF") {
  CHECK(discrete_gaussian_pmf(0, 1.0) == doctest::Approx(0.3829249225480262).epsilon(1e-12));
  for (int k = 0; k < 10; ++k) CHECK(discrete_gaussian_pmf(k, 2.3) == discrete_gaussian_pmf(-k, 2.3));
  double total = 0.0;
  for (int k = -200; k <= 200; ++k) total += discrete_gaussian_pmf(k, 7.5);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Gaussian tables satisfy the table invariants") {
  const CdfTableSet set = build_gaussian_tables();
  REQUIRE(set.size() == 64);
  CHECK_NOTHROW(set.validate());
  const auto& scales = gaussian_scale_table();
  for (size_t b = 0; b < set.size(); ++b) {
    const CdfTable& t = set[b];
    const int half = gaussian_half_support(scales[b]);
    CHECK(half <= std::min(static_cast<int>(std::ceil(9.0 * scales[b])), 128));
    CHECK(discrete_gaussian_pmf(half, scales[b]) >= 0.5 / 65536.0);
    CHECK(t.offset == -half);
    CHECK(t.length() == 2 * half + 2);
    CHECK(t.cdf.front() == 0);
    CHECK(t.cdf.back() == 65536);

    // Quantization oracle: real PMF (support + tail mass in the escape slot)
    // against the integer frequencies.
    std::vector<double> real;
    for (int k = -half; k <= half; ++k) real.push_back(discrete_gaussian_pmf(k, scales[b]));
    const double support = std::accumulate(real.begin(), real.end(), 0.0);
    real.push_back(std::max(1.0 - support, 0.0));
    const double total = std::accumulate(real.begin(), real.end(), 0.0);
    double max_diff = 0.0;
    for (int i = 0; i < t.length(); ++i) {
      max_diff = std::max(max_diff, std::abs(t.freq(i) / 65536.0 - real[i] / total));
    }
    CHECK(max_diff <= 2.0 / 65536.0);
  }
}

TEST_CASE("flat layout round-trips and validation rejects broken tables") {
  const CdfTableSet set = build_gaussian_tables();
  const auto flat = set.flatten();
  const CdfTableSet back = CdfTableSet::from_flat(flat.cdfs, flat.lengths, flat.offsets);
  REQUIRE(back.size() == set.size());
  for (size_t i = 0; i < set.size(); ++i) {
    CHECK(back[i].cdf == set[i].cdf);
    CHECK(back[i].offset == set[i].offset);
  }

  auto bad = flat;
  bad.cdfs[1] = 0;  // zero-frequency slot
  CHECK_THROWS_AS(CdfTableSet::from_flat(bad.cdfs, bad.lengths, bad.offsets), FormatError);
  bad = flat;
  bad.cdfs.pop_back();
  CHECK_THROWS_AS(CdfTableSet::from_flat(bad.cdfs, bad.lengths, bad.offsets), FormatError);
}

TEST_CASE("random PMFs quantize to valid tables") {
  std::mt19937 rng(9);
  std::exponential_distribution<double> e(1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pmf(2 + rng() % 300);
    for (double& v : pmf) v = std::pow(e(rng), 4.0);
    const auto cdf = quantize_pmf(pmf);
    CHECK(cdf.back() == 65536);
    bool increasing = true;
    for (size_t i = 1; i < cdf.size(); ++i) increasing &= cdf[i] > cdf[i - 1];
    CHECK(increasing);
  }
}
