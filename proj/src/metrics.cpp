#include "lumen/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "lumen/errors.hpp"

namespace lumen {
namespace {

void check_same_dims(const ImageTensor& a, const ImageTensor& b) {
  if (a.orig_height != b.orig_height || a.orig_width != b.orig_width) {
    throw ArgumentError("image dimensions differ");
  }
}

constexpr std::array<double, 5> kScaleWeights = {0.0448, 0.2856, 0.3001,
                                                 0.2363, 0.1333};
constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    w[i] = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Valid-mode separable Gaussian filter.
Plane filter_valid(const Plane& in) {
  static const auto w = gaussian_window();
  const int oh = in.height - kWindow + 1, ow = in.width - kWindow + 1;
  Plane rows(in.height, ow);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += w[k] * in.at(y, x + k);
      rows.at(y, x) = acc;
    }
  }
  Plane out(oh, ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += w[k] * rows.at(y + k, x);
      out.at(y, x) = acc;
    }
  }
  return out;
}

Plane multiply(const Plane& a, const Plane& b) {
  Plane out(a.height, a.width);
  for (size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

Plane downsample2(const Plane& in) {
  Plane out(in.height / 2, in.width / 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      out.at(y, x) = 0.25 * (in.at(2 * y, 2 * x) + in.at(2 * y, 2 * x + 1) +
                             in.at(2 * y + 1, 2 * x) + in.at(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

// Mean SSIM and mean contrast-structure term at one scale.
std::pair<double, double> ssim_terms(const Plane& x, const Plane& y) {
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const Plane mu_x = filter_valid(x), mu_y = filter_valid(y);
  const Plane xx = filter_valid(multiply(x, x));
  const Plane yy = filter_valid(multiply(y, y));
  const Plane xy = filter_valid(multiply(x, y));
  double ssim_sum = 0.0, cs_sum = 0.0;
  for (size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x.data[i], my = mu_y.data[i];
    const double sxx = xx.data[i] - mx * mx;
    const double syy = yy.data[i] - my * my;
    const double sxy = xy.data[i] - mx * my;
    const double cs = (2.0 * sxy + c2) / (sxx + syy + c2);
    cs_sum += cs;
    ssim_sum += (2.0 * mx * my + c1) / (mx * mx + my * my + c1) * cs;
  }
  const double n = static_cast<double>(mu_x.size());
  return {ssim_sum / n, cs_sum / n};
}

Plane channel(const ImageTensor& img, int c) {
  Plane p(img.orig_height, img.orig_width);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) p.at(y, x) = img.at(c, y, x);
  }
  return p;
}

}  // namespace

double mse(const ImageTensor& a, const ImageTensor& b) {
  check_same_dims(a, b);
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < a.orig_height; ++y) {
      for (int x = 0; x < a.orig_width; ++x) {
        const double d = a.at(c, y, x) - b.at(c, y, x);
        acc += d * d;
      }
    }
  }
  return acc / (3.0 * a.orig_height * a.orig_width);
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  const double m = mse(a, b);
  if (m <= 0.0) return kMetricCapDb;
  return std::min(kMetricCapDb, -10.0 * std::log10(m));
}

double ms_ssim(const ImageTensor& a, const ImageTensor& b) {
  check_same_dims(a, b);
  if (std::min(a.orig_height, a.orig_width) < kMsSsimMinSide) {
    throw ArgumentError("ms_ssim needs images of at least " +
                        std::to_string(kMsSsimMinSide) + "x" +
                        std::to_string(kMsSsimMinSide) + " pixels");
  }
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    Plane x = channel(a, c), y = channel(b, c);
    double value = 1.0;
    for (size_t s = 0; s < kScaleWeights.size(); ++s) {
      const auto [ssim, cs] = ssim_terms(x, y);
      const bool last = s + 1 == kScaleWeights.size();
      value *= std::pow(std::max(last ? ssim : cs, 0.0), kScaleWeights[s]);
      if (!last) {
        x = downsample2(x);
        y = downsample2(y);
      }
    }
    total += value;
  }
  return total / 3.0;
}

double ms_ssim_db(double v) {
  if (v >= 1.0) return kMetricCapDb;
  return std::min(kMetricCapDb, -10.0 * std::log10(1.0 - v));
}

}  // namespace lumen
