#include "lumen/container.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "lumen/errors.hpp"

namespace lumen {
namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get_u32(std::span<const uint8_t> in, size_t pos) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t{in[pos + i]} << (8 * i);
  return v;
}

}  // namespace

std::vector<uint8_t> BitstreamContainer::pack() const {
  std::vector<uint8_t> out(kMagic.begin(), kMagic.end());
  out.reserve(total_size());
  out.push_back(version);
  out.push_back(quality_index);
  put_u32(out, orig_height);
  put_u32(out, orig_width);
  put_u32(out, static_cast<uint32_t>(z_stream.size()));
  put_u32(out, static_cast<uint32_t>(y_stream.size()));
  out.insert(out.end(), z_stream.begin(), z_stream.end());
  out.insert(out.end(), y_stream.begin(), y_stream.end());
  return out;
}

BitstreamContainer BitstreamContainer::unpack(std::span<const uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("container shorter than header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError("bad container magic");
  }
  BitstreamContainer c;
  c.version = bytes[4];
  if (c.version != kVersion) {
    throw FormatError("unsupported container version " + std::to_string(c.version));
  }
  c.quality_index = bytes[5];
  c.orig_height = get_u32(bytes, 6);
  c.orig_width = get_u32(bytes, 10);
  const uint64_t z_len = get_u32(bytes, 14);
  const uint64_t y_len = get_u32(bytes, 18);
  if (kHeaderSize + z_len + y_len != bytes.size()) {
    throw FormatError("container stream lengths do not match its size");
  }
  if (c.orig_height == 0 || c.orig_width == 0) {
    throw FormatError("container has zero image dimensions");
  }
  auto z_begin = bytes.begin() + kHeaderSize;
  c.z_stream.assign(z_begin, z_begin + z_len);
  c.y_stream.assign(z_begin + z_len, bytes.end());
  return c;
}

void BitstreamContainer::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  const auto bytes = pack();
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path);
}

BitstreamContainer BitstreamContainer::read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return unpack(bytes);
}

double bits_per_pixel(const BitstreamContainer& c) {
  return 8.0 * static_cast<double>(c.total_size()) /
         (static_cast<double>(c.orig_height) * c.orig_width);
}

}  // namespace lumen
