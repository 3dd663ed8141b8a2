#include <random>

#include "doctest.h"
#include "lumen/errors.hpp"
#include "lumen/snr.hpp"

using namespace lumen;

namespace {

// Per-pixel evaluation of the SNR definition: direct k x k window sum with
// replicated borders, no separable passes.
double snr_oracle(const ImageTensor& img, int y, int x, int k) {
  auto gray = [&](int yy, int xx) {
    yy = std::clamp(yy, 0, img.height - 1);
    xx = std::clamp(xx, 0, img.width - 1);
    return 0.299 * img.at(0, yy, xx) + 0.587 * img.at(1, yy, xx) + 0.114 * img.at(2, yy, xx);
  };
  double sum = 0.0;
  for (int dy = -k / 2; dy <= k / 2; ++dy)
    for (int dx = -k / 2; dx <= k / 2; ++dx) sum += gray(y + dy, x + dx);
  const double denoised = sum / (k * k);
  if (denoised == 0.0) return 0.0;
  const double noise = std::abs(gray(y, x) - denoised);
  return std::clamp(denoised / std::max(noise, 1e-6), 0.0, 100.0);
}

}  // namespace

TEST_CASE("SNR map of a centred impulse") {
  ImageTensor img(5, 5);
  for (int c = 0; c < 3; ++c) img.at(c, 2, 2) = 1.0;
  const Plane s = compute_snr_map(img);
  CHECK(s.at(2, 2) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(s.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));  // (1/9) / (1/9)
  CHECK(s.at(0, 0) == 0.0);                                   // no signal in window
}

TEST_CASE("SNR map degenerate cases") {
  SUBCASE("constant image hits the clamp") {
    ImageTensor img(6, 7, 0.3);
    for (double v : compute_snr_map(img).data) CHECK(v == 100.0);
  }
  SUBCASE("all-zero image is zero") {
    for (double v : compute_snr_map(ImageTensor(6, 7)).data) CHECK(v == 0.0);
  }
  SUBCASE("kernel size validation") {
    CHECK_THROWS_AS(compute_snr_map(ImageTensor(4, 4), {.kernel_size = 4}), ArgumentError);
    CHECK_THROWS_AS(compute_snr_map(ImageTensor(4, 4), {.kernel_size = 1}), ArgumentError);
  }
}

TEST_CASE("SNR map matches per-pixel brute force") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k : {3, 5}) {
    for (int trial = 0; trial < 10; ++trial) {
      ImageTensor img(32, 32);
      const double gain = 0.05 + 0.95 * u(rng);
      for (double& v : img.data) v = gain * u(rng);
      const Plane s = compute_snr_map(img, {.kernel_size = k});
      double max_err = 0.0;
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
          max_err = std::max(max_err, std::abs(s.at(y, x) - snr_oracle(img, y, x, k)));
      CHECK(max_err <= 1e-9);
      for (double v : s.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 100.0);
      }
    }
  }
}

TEST_CASE("normalize_snr") {
  Plane s(2, 2);
  s.data = {0.5, 2.5, 1.5, 4.5};
  const Plane n = normalize_snr(s);
  CHECK(n.data[0] == 0.0);
  CHECK(n.data[3] == 1.0);
  CHECK(n.data[1] == doctest::Approx(0.5));

  CHECK(normalize_snr(Plane(3, 3, 100.0)).data[4] == 1.0);
  CHECK(normalize_snr(Plane(3, 3, 0.0)).data[4] == 0.0);
  CHECK(normalize_snr(Plane(3, 3, 25.0)).data[4] == 0.25);
}

TEST_CASE("SNR map counter tracks construction") {
  const uint64_t before = snr_map_count();
  compute_snr_map(ImageTensor(4, 4, 0.5));
  CHECK(snr_map_count() == before + 1);
}
