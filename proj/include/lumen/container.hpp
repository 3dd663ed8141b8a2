#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lumen {

// On-disk bitstream.  Little-endian layout:
//
//   offset  size  field
//        0     4  magic "JLLC"
//        4     1  version
//        5     1  quality index (0-7)
//        6     4  original height
//       10     4  original width
//       14     4  z_len  (bytes of the hyper-latent stream)
//       18     4  y_len  (bytes of the latent stream)
//       22  z_len z stream
//         y_len   y stream
struct BitstreamContainer {
  static constexpr std::array<uint8_t, 4> kMagic = {'J', 'L', 'L', 'C'};
  static constexpr uint8_t kVersion = 1;
  static constexpr size_t kHeaderSize = 22;

  uint8_t version = kVersion;
  uint8_t quality_index = 0;
  uint32_t orig_height = 0;
  uint32_t orig_width = 0;
  std::vector<uint8_t> z_stream;
  std::vector<uint8_t> y_stream;

  size_t total_size() const {
    return kHeaderSize + z_stream.size() + y_stream.size();
  }

  std::vector<uint8_t> pack() const;

  // Throws FormatError on bad magic, unknown version, or length mismatch.
  static BitstreamContainer unpack(std::span<const uint8_t> bytes);

  void write(const std::string& path) const;
  static BitstreamContainer read(const std::string& path);
};

// 8 * total container bytes / (orig_height * orig_width).
double bits_per_pixel(const BitstreamContainer& c);

}  // namespace lumen
