#pragma once

#include "lumen/container.hpp"
#include "lumen/image.hpp"

namespace lumen {

// Reported for identical images instead of +inf.
inline constexpr double kMetricCapDb = 100.0;

// Mean squared error over the original-size region (dynamic range 1).
double mse(const ImageTensor& a, const ImageTensor& b);

// 10 log10(1 / MSE), capped at kMetricCapDb.  Throws ArgumentError when the
// original dims differ.
double psnr(const ImageTensor& a, const ImageTensor& b);

// Smallest side accepted by ms_ssim: five dyadic scales must each keep an
// 11-tap window inside the image.
inline constexpr int kMsSsimMinSide = 161;

// Five-scale MS-SSIM (11x11 Gaussian window, sigma 1.5, weights
// 0.0448/0.2856/0.3001/0.2363/0.1333), averaged over RGB.  Negative
// per-scale terms are clamped to zero before the weighted product.
double ms_ssim(const ImageTensor& a, const ImageTensor& b);

// -10 log10(1 - v), capped at kMetricCapDb.
double ms_ssim_db(double v);

inline double bpp(const BitstreamContainer& c) { return bits_per_pixel(c); }

}  // namespace lumen
