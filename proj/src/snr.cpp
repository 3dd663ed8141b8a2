#include "lumen/snr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "lumen/errors.hpp"

namespace lumen {
namespace {

std::atomic<uint64_t> g_snr_maps{0};

// Box filter with edge replication; separable, row pass then column pass.
Plane box_filter(const Plane& in, int k) {
  const int r = k / 2;
  Plane rows(in.height, in.width);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) {
        acc += in.at(y, std::clamp(x + d, 0, in.width - 1));
      }
      rows.at(y, x) = acc;
    }
  }
  Plane out(in.height, in.width);
  const double norm = 1.0 / (static_cast<double>(k) * k);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) {
        acc += rows.at(std::clamp(y + d, 0, in.height - 1), x);
      }
      out.at(y, x) = acc * norm;
    }
  }
  return out;
}

}  // namespace

Plane compute_snr_map(const ImageTensor& image, const SnrOptions& opts) {
  if (opts.kernel_size < 3 || opts.kernel_size % 2 == 0) {
    throw ArgumentError("SNR kernel size must be odd and >= 3");
  }
  g_snr_maps.fetch_add(1, std::memory_order_relaxed);

  const Plane gray = to_grayscale(image);
  const Plane denoised = box_filter(gray, opts.kernel_size);
  Plane snr(gray.height, gray.width);
  for (size_t i = 0; i < gray.size(); ++i) {
    const double signal = denoised.data[i];
    if (signal == 0.0) {
      snr.data[i] = 0.0;
      continue;
    }
    const double noise = std::abs(gray.data[i] - signal);
    snr.data[i] = std::clamp(signal / std::max(noise, opts.eps), 0.0, opts.s_max);
  }
  return snr;
}

Plane normalize_snr(const Plane& snr, double s_max) {
  Plane out(snr.height, snr.width);
  if (snr.size() == 0) return out;
  const auto [lo_it, hi_it] = std::minmax_element(snr.data.begin(), snr.data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi - lo < 1e-12) {
    std::fill(out.data.begin(), out.data.end(), std::clamp(lo / s_max, 0.0, 1.0));
    return out;
  }
  const double inv = 1.0 / (hi - lo);
  for (size_t i = 0; i < snr.size(); ++i) {
    out.data[i] = std::clamp((snr.data[i] - lo) * inv, 0.0, 1.0);
  }
  return out;
}

uint64_t snr_map_count() { return g_snr_maps.load(std::memory_order_relaxed); }

}  // namespace lumen
