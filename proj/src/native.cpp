#include "lumen/native.hpp"

#include <dlfcn.h>

#include <cstdlib>

#include "lumen/errors.hpp"

namespace lumen {

size_t reference_encode_bound(size_t n) {
  // Escape slot (<= 2 bytes) plus 17 single-op raw fields per symbol.
  return 24 * n + 8;
}

void throw_native_status(int32_t status, const char* what) {
  const std::string msg = std::string(what) + ": native coder status " +
                          std::to_string(status);
  switch (status) {
    case LUMEN_OK:
      return;
    case LUMEN_ERR_INVALID_ARGUMENT:
    case LUMEN_ERR_TABLE_ID:
    case LUMEN_ERR_BUFFER_TOO_SMALL:
      throw ArgumentError(msg);
    case LUMEN_ERR_INVALID_TABLE:
      throw FormatError(msg);
    case LUMEN_ERR_TRUNCATED:
    case LUMEN_ERR_DESYNC:
      throw DecodeError(msg);
    default:
      throw Error(msg);
  }
}

std::shared_ptr<NativeCoderLibrary> NativeCoderLibrary::open(const std::string& path) {
  void* dl = dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (dl == nullptr) {
    const char* err = dlerror();
    throw IoError("cannot load native coder " + path + ": " + (err ? err : "?"));
  }
  std::shared_ptr<NativeCoderLibrary> lib(new NativeCoderLibrary());
  lib->dl_ = dl;
  auto resolve = [&](auto& fn, const char* name) {
    fn = reinterpret_cast<std::remove_reference_t<decltype(fn)>>(dlsym(dl, name));
    if (fn == nullptr) throw IoError(std::string("native coder lacks symbol ") + name);
  };
  resolve(lib->abi_version_, "lumen_native_abi_version");
  resolve(lib->create_, "lumen_coder_create");
  resolve(lib->destroy_, "lumen_coder_destroy");
  resolve(lib->encode_bound_, "lumen_encode_bound");
  resolve(lib->encode_, "lumen_encode");
  resolve(lib->decode_, "lumen_decode");
  if (lib->abi_version_() != LUMEN_NATIVE_ABI_VERSION) {
    throw ConfigError("native coder ABI version mismatch");
  }
  return lib;
}

std::optional<std::shared_ptr<NativeCoderLibrary>> NativeCoderLibrary::from_env() {
  const char* path = std::getenv(kNativeCoderEnv);
  if (path == nullptr || *path == '\0') return std::nullopt;
  return open(path);
}

NativeCoderLibrary::~NativeCoderLibrary() {
  if (dl_ != nullptr) dlclose(dl_);
}

NativeCoderLibrary::Handle NativeCoderLibrary::make_handle(
    const std::shared_ptr<NativeCoderLibrary>& lib, const CdfTableSet& tables) {
  const auto flat = tables.flatten();
  lumen_coder* raw = nullptr;
  throw_native_status(
      lib->create_(flat.cdfs.data(), flat.cdfs.size(), flat.lengths.data(),
                   flat.offsets.data(), flat.lengths.size(), tables.precision, &raw),
      "lumen_coder_create");
  Handle h;
  h.lib_ = lib;
  auto destroy = lib->destroy_;
  h.coder_ = std::shared_ptr<lumen_coder>(raw, [destroy](lumen_coder* c) { destroy(c); });
  return h;
}

std::vector<uint8_t> NativeCoderLibrary::Handle::encode(
    std::span<const int32_t> symbols, std::span<const int32_t> table_ids) const {
  if (symbols.size() != table_ids.size()) {
    throw ArgumentError("native encode: symbols/table_ids length mismatch");
  }
  std::vector<uint8_t> out(lib_->encode_bound_(symbols.size()));
  size_t len = 0;
  throw_native_status(lib_->encode_(coder_.get(), symbols.data(), table_ids.data(),
                                    symbols.size(), out.data(), out.size(), &len),
                      "lumen_encode");
  out.resize(len);
  return out;
}

std::vector<int32_t> NativeCoderLibrary::Handle::decode(
    std::span<const uint8_t> stream, std::span<const int32_t> table_ids,
    size_t n) const {
  if (table_ids.size() != n) {
    throw ArgumentError("native decode: table_ids length must equal n");
  }
  std::vector<int32_t> out(n);
  throw_native_status(lib_->decode_(coder_.get(), stream.data(), stream.size(),
                                    table_ids.data(), n, out.data()),
                      "lumen_decode");
  return out;
}

}  // namespace lumen
