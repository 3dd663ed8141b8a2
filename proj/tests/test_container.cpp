#include <filesystem>

#include "doctest.h"
#include "lumen/container.hpp"
#include "lumen/errors.hpp"

using namespace lumen;

namespace {

BitstreamContainer sample() {
  BitstreamContainer c;
  c.quality_index = 5;
  c.orig_height = 0x01020304;
  c.orig_width = 960;
  c.z_stream = {1, 2, 3};
  c.y_stream = {9, 8, 7, 6, 5};
  return c;
}

}  // namespace

TEST_CASE("header layout is little-endian and fixed size") {
  const auto bytes = sample().pack();
  REQUIRE(bytes.size() == 22 + 3 + 5);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "JLLC");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 5);
  CHECK(bytes[6] == 0x04);
  CHECK(bytes[9] == 0x01);
  CHECK(bytes[10] == (960 & 0xff));
  CHECK(bytes[14] == 3);
  CHECK(bytes[18] == 5);
  CHECK(bytes[22] == 1);
  CHECK(bytes[25] == 9);
}

TEST_CASE("pack/unpack is the identity on every field") {
  const BitstreamContainer c = sample();
  const BitstreamContainer back = BitstreamContainer::unpack(c.pack());
  CHECK(back.version == c.version);
  CHECK(back.quality_index == c.quality_index);
  CHECK(back.orig_height == c.orig_height);
  CHECK(back.orig_width == c.orig_width);
  CHECK(back.z_stream == c.z_stream);
  CHECK(back.y_stream == c.y_stream);
  CHECK(back.total_size() == 22 + back.z_stream.size() + back.y_stream.size());
}

TEST_CASE("file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "lumen_container_test.jllc";
  sample().write(path.string());
  CHECK(std::filesystem::file_size(path) == 30);
  CHECK(BitstreamContainer::read(path.string()).y_stream == sample().y_stream);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(BitstreamContainer::read(path.string()), IoError);
}

TEST_CASE("malformed containers") {
  auto bytes = sample().pack();
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(BitstreamContainer::unpack(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(BitstreamContainer::unpack(bad), FormatError);
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(BitstreamContainer::unpack(bad), FormatError);
  CHECK_THROWS_AS(BitstreamContainer::unpack(std::span(bytes).first(10)), FormatError);
  bad = bytes;
  bad[6] = bad[7] = bad[8] = bad[9] = 0;
  CHECK_THROWS_AS(BitstreamContainer::unpack(bad), FormatError);
}
