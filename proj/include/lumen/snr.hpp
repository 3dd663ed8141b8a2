#pragma once

#include <cstdint>

#include "lumen/image.hpp"

namespace lumen {

struct SnrOptions {
  int kernel_size = 3;   // odd box-filter width, >= 3
  double eps = 1e-6;     // noise floor in the ratio
  double s_max = 100.0;  // upper clamp
};

// Per-pixel SNR estimate of a (dark) image.  The grayscale image is denoised
// with a kernel_size box filter (edge-replicated borders); the noise is the
// absolute residual and s = denoised / max(noise, eps), clamped to
// [0, s_max].  A zero denoised value yields 0 regardless of the noise.
Plane compute_snr_map(const ImageTensor& image, const SnrOptions& opts = {});

// Per-image min-max normalisation to [0,1].  A flat map normalises to
// clamp(s / s_max, 0, 1), so a noise-free bright image maps to 1 and an
// all-zero image to 0.
Plane normalize_snr(const Plane& snr, double s_max = 100.0);

// Number of SNR maps built by this process so far.
uint64_t snr_map_count();

}  // namespace lumen
