#include "lumen/image.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "lumen/errors.hpp"

namespace lumen {

Plane::Plane(int h, int w, double fill)
    : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

ImageTensor::ImageTensor(int h, int w, double fill)
    : height(h),
      width(w),
      orig_height(h),
      orig_width(w),
      data(static_cast<size_t>(3) * h * w, fill) {}

namespace {

int round_up(int v, int multiple) {
  return (v + multiple - 1) / multiple * multiple;
}

}  // namespace

ImageTensor load_image(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw IoError("cannot open image: " + path);
  }
  cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw IoError("cannot decode image: " + path);
  if (mat.channels() != 3) {
    throw FormatError("expected an RGB image, got " +
                      std::to_string(mat.channels()) + " channel(s): " + path);
  }
  double scale;
  if (mat.depth() == CV_8U) {
    scale = 1.0 / 255.0;
  } else if (mat.depth() == CV_16U) {
    scale = 1.0 / 65535.0;
  } else {
    throw FormatError("unsupported sample depth (need 8 or 16 bit): " + path);
  }
  ImageTensor img(mat.rows, mat.cols);
  for (int y = 0; y < mat.rows; ++y) {
    for (int x = 0; x < mat.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        // OpenCV stores BGR.
        double v = mat.depth() == CV_8U
                       ? mat.at<cv::Vec3b>(y, x)[2 - c]
                       : mat.at<cv::Vec3w>(y, x)[2 - c];
        img.at(c, y, x) = v * scale;
      }
    }
  }
  return pad_to_multiple(img);
}

void save_image(const std::string& path, const ImageTensor& image, int bits) {
  if (bits != 8 && bits != 16) throw ArgumentError("bits must be 8 or 16");
  const int h = image.orig_height, w = image.orig_width;
  cv::Mat mat(h, w, bits == 8 ? CV_8UC3 : CV_16UC3);
  const double maxv = bits == 8 ? 255.0 : 65535.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        long q = std::lround(v * maxv);
        if (bits == 8) {
          mat.at<cv::Vec3b>(y, x)[2 - c] = static_cast<uint8_t>(q);
        } else {
          mat.at<cv::Vec3w>(y, x)[2 - c] = static_cast<uint16_t>(q);
        }
      }
    }
  }
  if (!cv::imwrite(path, mat)) throw IoError("cannot write image: " + path);
}

ImageTensor pad_to_at_least(const ImageTensor& image, int h, int w) {
  const int nh = std::max(h, image.height), nw = std::max(w, image.width);
  ImageTensor out(nh, nw);
  out.orig_height = image.orig_height > 0 ? image.orig_height : image.height;
  out.orig_width = image.orig_width > 0 ? image.orig_width : image.width;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < nh; ++y) {
      const int sy = std::min(y, image.height - 1);
      for (int x = 0; x < nw; ++x) {
        out.at(c, y, x) = image.at(c, sy, std::min(x, image.width - 1));
      }
    }
  }
  return out;
}

ImageTensor pad_to_multiple(const ImageTensor& image, int multiple) {
  if (multiple <= 0) throw ArgumentError("padding multiple must be positive");
  return pad_to_at_least(image, round_up(image.height, multiple),
                         round_up(image.width, multiple));
}

ImageTensor crop(const ImageTensor& image, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || h <= 0 || w <= 0 || y0 + h > image.height ||
      x0 + w > image.width) {
    throw ArgumentError("crop window outside image");
  }
  ImageTensor out(h, w);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(c, y, x) = image.at(c, y0 + y, x0 + x);
    }
  }
  return out;
}

ImageTensor crop_to_original(const ImageTensor& image) {
  return crop(image, 0, 0, image.orig_height, image.orig_width);
}

Plane to_grayscale(const ImageTensor& image) {
  Plane out(image.height, image.width);
  const size_t n = image.plane_size();
  const double* r = image.data.data();
  const double* g = r + n;
  const double* b = g + n;
  for (size_t i = 0; i < n; ++i) {
    out.data[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  }
  return out;
}

Plane resize_map(const Plane& plane, int height, int width) {
  if (height <= 0 || width <= 0) {
    throw ArgumentError("resize_map: target dims must be positive");
  }
  if (plane.height <= 0 || plane.width <= 0) {
    throw ArgumentError("resize_map: empty source plane");
  }
  if (height == plane.height && width == plane.width) return plane;

  // Source coordinate of each destination sample, half-pixel aligned.
  auto taps = [](int dst, int src) {
    std::vector<std::pair<int, double>> t(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
      double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, src - 1.0);
      int i0 = std::min(static_cast<int>(s), src - 1);
      t[i] = {i0, s - i0};
    }
    return t;
  };
  const auto ty = taps(height, plane.height);
  const auto tx = taps(width, plane.width);

  Plane out(height, width);
  for (int y = 0; y < height; ++y) {
    const int y0 = ty[y].first;
    const int y1 = std::min(y0 + 1, plane.height - 1);
    const double fy = ty[y].second;
    for (int x = 0; x < width; ++x) {
      const int x0 = tx[x].first;
      const int x1 = std::min(x0 + 1, plane.width - 1);
      const double fx = tx[x].second;
      const double top = plane.at(y0, x0) + fx * (plane.at(y0, x1) - plane.at(y0, x0));
      const double bot = plane.at(y1, x0) + fx * (plane.at(y1, x1) - plane.at(y1, x0));
      const double lo = std::min({plane.at(y0, x0), plane.at(y0, x1),
                                  plane.at(y1, x0), plane.at(y1, x1)});
      const double hi = std::max({plane.at(y0, x0), plane.at(y0, x1),
                                  plane.at(y1, x0), plane.at(y1, x1)});
      out.at(y, x) = std::clamp(top + fy * (bot - top), lo, hi);
    }
  }
  return out;
}

ImageTensor image_from_rgb8(const unsigned char* rgb, int height, int width) {
  ImageTensor img(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(c, y, x) = rgb[(static_cast<size_t>(y) * width + x) * 3 + c] / 255.0;
      }
    }
  }
  return img;
}

}  // namespace lumen
