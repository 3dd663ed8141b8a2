#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lumen/cdf.hpp"
#include "lumen/native_coder.h"

namespace lumen {

inline constexpr const char* kNativeCoderEnv = "LUMEN_NATIVE_CODER";

// Bytes the reference coder may need for n symbols; the native library's
// lumen_encode_bound must not be smaller.
size_t reference_encode_bound(size_t n);

// Dynamically loaded native coder.  Status codes from the library are
// turned into the same exception types the reference coder throws.
class NativeCoderLibrary {
 public:
  // Throws IoError if the library cannot be loaded or lacks a symbol,
  // ConfigError on an ABI version mismatch.
  static std::shared_ptr<NativeCoderLibrary> open(const std::string& path);

  // Library named by LUMEN_NATIVE_CODER, or nullopt when unset.
  static std::optional<std::shared_ptr<NativeCoderLibrary>> from_env();

  ~NativeCoderLibrary();
  NativeCoderLibrary(const NativeCoderLibrary&) = delete;
  NativeCoderLibrary& operator=(const NativeCoderLibrary&) = delete;

  class Handle {
   public:
    std::vector<uint8_t> encode(std::span<const int32_t> symbols,
                                std::span<const int32_t> table_ids) const;
    std::vector<int32_t> decode(std::span<const uint8_t> stream,
                                std::span<const int32_t> table_ids,
                                size_t n) const;

   private:
    friend class NativeCoderLibrary;
    std::shared_ptr<NativeCoderLibrary> lib_;
    std::shared_ptr<lumen_coder> coder_;
  };

  static Handle make_handle(const std::shared_ptr<NativeCoderLibrary>& lib,
                            const CdfTableSet& tables);

 private:
  NativeCoderLibrary() = default;

  void* dl_ = nullptr;
  decltype(&lumen_native_abi_version) abi_version_ = nullptr;
  decltype(&lumen_coder_create) create_ = nullptr;
  decltype(&lumen_coder_destroy) destroy_ = nullptr;
  decltype(&lumen_encode_bound) encode_bound_ = nullptr;
  decltype(&lumen_encode) encode_ = nullptr;
  decltype(&lumen_decode) decode_ = nullptr;
};

// Maps a lumen_status to the matching exception; no-op for LUMEN_OK.
void throw_native_status(int32_t status, const char* what);

}  // namespace lumen
