#include "lumen/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <set>

#include "lumen/errors.hpp"

namespace lumen {
namespace {

constexpr char kMagic[4] = {'L', 'C', 'K', 'P'};
constexpr int64_t kMaxRank = 8;

size_t element_size(ArchiveEntry::Dtype dtype) {
  return dtype == ArchiveEntry::Dtype::kU8 ? 1 : 4;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("checkpoint truncated");
  return v;
}

ArchiveEntry tensor_entry(const torch::Tensor& t) {
  auto cpu = t.detach().to(torch::kFloat).contiguous();
  ArchiveEntry e;
  e.dtype = ArchiveEntry::Dtype::kF32;
  e.dims.assign(cpu.sizes().begin(), cpu.sizes().end());
  e.data.resize(cpu.numel() * sizeof(float));
  std::memcpy(e.data.data(), cpu.data_ptr<float>(), e.data.size());
  return e;
}

ArchiveEntry int_entry(const std::vector<int32_t>& v) {
  ArchiveEntry e;
  e.dtype = ArchiveEntry::Dtype::kI32;
  e.dims = {static_cast<int64_t>(v.size())};
  e.data.resize(v.size() * sizeof(int32_t));
  std::memcpy(e.data.data(), v.data(), e.data.size());
  return e;
}

ArchiveEntry string_entry(const std::string& s) {
  ArchiveEntry e;
  e.dtype = ArchiveEntry::Dtype::kU8;
  e.dims = {static_cast<int64_t>(s.size())};
  e.data.assign(s.begin(), s.end());
  return e;
}

const ArchiveEntry& require(const Archive& a, const std::string& key, ArchiveEntry::Dtype dtype) {
  auto it = a.find(key);
  if (it == a.end()) throw FormatError("checkpoint is missing key " + key);
  if (it->second.dtype != dtype) throw FormatError("checkpoint key " + key + " has the wrong dtype");
  return it->second;
}

std::string read_string(const Archive& a, const std::string& key) {
  const auto& e = require(a, key, ArchiveEntry::Dtype::kU8);
  return std::string(e.data.begin(), e.data.end());
}

std::vector<int32_t> read_ints(const Archive& a, const std::string& key) {
  const auto& e = require(a, key, ArchiveEntry::Dtype::kI32);
  std::vector<int32_t> v(e.numel());
  std::memcpy(v.data(), e.data.data(), e.data.size());
  return v;
}

void add_tables(Archive& a, const std::string& prefix, const CdfTableSet& set) {
  auto flat = set.flatten();
  a[prefix + "cdfs"] = int_entry(flat.cdfs);
  a[prefix + "lengths"] = int_entry(flat.lengths);
  a[prefix + "offsets"] = int_entry(flat.offsets);
  a[prefix + "precision"] = int_entry({set.precision});
}

CdfTableSet read_tables(const Archive& a, const std::string& prefix) {
  auto precision = read_ints(a, prefix + "precision");
  if (precision.size() != 1) throw FormatError("bad table precision entry");
  auto cdfs = read_ints(a, prefix + "cdfs");
  auto lengths = read_ints(a, prefix + "lengths");
  auto offsets = read_ints(a, prefix + "offsets");
  return CdfTableSet::from_flat(cdfs, lengths, offsets, precision[0]);
}

const char* kTableKeys[] = {"cdfs", "lengths", "offsets", "precision"};

}  // namespace

int64_t ArchiveEntry::numel() const {
  int64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write_archive(const std::string& path, const Archive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  put<uint32_t>(out, kCheckpointVersion);
  put<uint32_t>(out, static_cast<uint32_t>(archive.size()));
  for (const auto& [key, e] : archive) {
    put<uint32_t>(out, static_cast<uint32_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    put<uint8_t>(out, static_cast<uint8_t>(e.dtype));
    put<uint32_t>(out, static_cast<uint32_t>(e.dims.size()));
    for (auto d : e.dims) put<int64_t>(out, d);
    out.write(reinterpret_cast<const char*>(e.data.data()),
              static_cast<std::streamsize>(e.data.size()));
  }
  if (!out) throw IoError("failed writing " + path);
}

Archive read_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path + " is not a checkpoint");
  }
  const auto version = get<uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get<uint32_t>(in);
  Archive archive;
  for (uint32_t i = 0; i < count; ++i) {
    const auto key_len = get<uint32_t>(in);
    if (key_len > 4096) throw FormatError("checkpoint key too long");
    std::string key(key_len, '\0');
    if (!in.read(key.data(), key_len)) throw FormatError("checkpoint truncated");
    ArchiveEntry e;
    const auto dtype = get<uint8_t>(in);
    if (dtype > 2) throw FormatError("unknown dtype for " + key);
    e.dtype = static_cast<ArchiveEntry::Dtype>(dtype);
    const auto rank = get<uint32_t>(in);
    if (rank > kMaxRank) throw FormatError("rank too large for " + key);
    for (uint32_t r = 0; r < rank; ++r) {
      const auto d = get<int64_t>(in);
      if (d < 0 || d > (int64_t{1} << 32)) throw FormatError("bad dimension for " + key);
      e.dims.push_back(d);
    }
    const auto bytes = static_cast<uint64_t>(e.numel()) * element_size(e.dtype);
    if (bytes > (uint64_t{1} << 34)) throw FormatError("entry too large: " + key);
    e.data.resize(bytes);
    if (!in.read(reinterpret_cast<char*>(e.data.data()), static_cast<std::streamsize>(bytes))) {
      throw FormatError("checkpoint truncated in " + key);
    }
    if (!archive.emplace(key, std::move(e)).second) throw FormatError("duplicate key " + key);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");
  return archive;
}

void save_checkpoint(const std::string& path, JointModel& model) {
  Archive a;
  a["meta/config"] = string_entry(model->config().to_json());
  a["meta/stage"] = string_entry(stage_name(model->stage()));
  for (const auto& item : model->named_parameters()) a["param/" + item.key()] = tensor_entry(item.value());
  for (const auto& item : model->named_buffers()) a["buffer/" + item.key()] = tensor_entry(item.value());
  if (model->tables_ready()) {
    add_tables(a, "cdf/gaussian/", model->gaussian_tables());
    add_tables(a, "cdf/z/", model->z_tables());
  }
  write_archive(path, a);
}

JointModel load_checkpoint(const std::string& path) {
  const Archive a = read_archive(path);
  JointModel model(ModelConfig::from_json(read_string(a, "meta/config")));
  model->set_stage(parse_stage(read_string(a, "meta/stage")));

  std::set<std::string> seen = {"meta/config", "meta/stage"};
  auto load_into = [&](const std::string& key, torch::Tensor& target) {
    const auto& e = require(a, key, ArchiveEntry::Dtype::kF32);
    if (e.dims != std::vector<int64_t>(target.sizes().begin(), target.sizes().end())) {
      throw FormatError("checkpoint key " + key + " has the wrong shape");
    }
    auto src = torch::from_blob(const_cast<uint8_t*>(e.data.data()), target.sizes(), torch::kFloat);
    torch::NoGradGuard no_grad;
    target.copy_(src);
    seen.insert(key);
  };
  for (auto& item : model->named_parameters()) load_into("param/" + item.key(), item.value());
  for (auto& item : model->named_buffers()) load_into("buffer/" + item.key(), item.value());

  const bool has_tables = a.count("cdf/gaussian/cdfs") > 0;
  if (has_tables) {
    for (const char* prefix : {"cdf/gaussian/", "cdf/z/"}) {
      for (const char* k : kTableKeys) seen.insert(std::string(prefix) + k);
    }
    model->set_tables(read_tables(a, "cdf/gaussian/"), read_tables(a, "cdf/z/"));
  }
  for (const auto& [key, e] : a) {
    if (!seen.count(key)) throw FormatError("checkpoint has unknown key " + key);
  }
  return model;
}

}  // namespace lumen
