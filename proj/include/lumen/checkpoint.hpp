#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lumen/model.hpp"

namespace lumen {

// Checkpoint archive: a flat key -> typed array map.
//
//   "LCKP"  u32 version  u32 entry count
//   per entry:  u32 key length, key bytes, u8 dtype (0 f32, 1 i32, 2 u8),
//               u32 rank, rank x i64 dims, raw little-endian data
//
// Keys written for a model:
//   meta/config        u8   JSON ModelConfig
//   meta/stage         u8   "init" | "pretrained" | "joint"
//   param/<name>       f32  every registered parameter
//   buffer/<name>      f32  every registered buffer
//   cdf/gaussian/{cdfs,lengths,offsets,precision}   i32  (when tables exist)
//   cdf/z/{cdfs,lengths,offsets,precision}          i32
inline constexpr uint32_t kCheckpointVersion = 1;

struct ArchiveEntry {
  enum class Dtype : uint8_t { kF32 = 0, kI32 = 1, kU8 = 2 };
  Dtype dtype = Dtype::kF32;
  std::vector<int64_t> dims;
  std::vector<uint8_t> data;  // raw element bytes

  int64_t numel() const;
};

using Archive = std::map<std::string, ArchiveEntry>;

void write_archive(const std::string& path, const Archive& archive);
// Throws IoError / FormatError.
Archive read_archive(const std::string& path);

void save_checkpoint(const std::string& path, JointModel& model);

// Rebuilds the model from meta/config.  Every expected key must be present
// with the expected shape and no unknown keys are accepted (FormatError).
JointModel load_checkpoint(const std::string& path);

}  // namespace lumen
