#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lumen {

// Total spatial downsampling of the codec: 16 from the main transform and
// 4 more from the hyper transform.  Padded images are multiples of this.
inline constexpr int kDownsampleFactor = 64;

// Single-channel real-valued grid, row-major.
struct Plane {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Plane() = default;
  Plane(int h, int w, double fill = 0.0);

  double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int y, int x) const {
    return data[static_cast<size_t>(y) * width + x];
  }
  size_t size() const { return data.size(); }
};

// Planar RGB image, values in [0,1], stored as [3][height][width].
// height/width are the (possibly padded) storage dims; orig_* record the
// dimensions of the source so padding can be undone exactly.
struct ImageTensor {
  int height = 0;
  int width = 0;
  int orig_height = 0;
  int orig_width = 0;
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, double fill = 0.0);

  double& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  size_t plane_size() const { return static_cast<size_t>(height) * width; }
};

// Decodes an 8- or 16-bit RGB file (PNG/JPEG/TIFF), scales to [0,1] and
// pads by edge replication to multiples of kDownsampleFactor.
// Throws IoError when the file cannot be read, FormatError for non-RGB data.
ImageTensor load_image(const std::string& path);

// Writes the original-size region of `image` (8 or 16 bits per channel).
void save_image(const std::string& path, const ImageTensor& image,
                int bits = 8);

// Edge-replicating pad so both dims are multiples of `multiple`.  orig_*
// is preserved when already set, otherwise taken from the current dims.
ImageTensor pad_to_multiple(const ImageTensor& image,
                            int multiple = kDownsampleFactor);

// Edge-replicating pad to at least (h, w).
ImageTensor pad_to_at_least(const ImageTensor& image, int h, int w);

// Region [y0, y0+h) x [x0, x0+w); the result's orig dims equal (h, w).
ImageTensor crop(const ImageTensor& image, int y0, int x0, int h, int w);

// Crops the padded storage back to orig_height x orig_width.
ImageTensor crop_to_original(const ImageTensor& image);

// ITU-R BT.601 luma.
Plane to_grayscale(const ImageTensor& image);

// Bilinear resampling with half-pixel centres (edge-clamped taps).
// Throws ArgumentError for non-positive target dims.
Plane resize_map(const Plane& plane, int height, int width);

// Converts interleaved 8-bit RGB rows to an unpadded ImageTensor.
ImageTensor image_from_rgb8(const unsigned char* rgb, int height, int width);

}  // namespace lumen
