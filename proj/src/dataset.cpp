#include "lumen/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "lumen/errors.hpp"
#include "lumen/model.hpp"

namespace fs = std::filesystem;

namespace lumen {
namespace {

bool is_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".tif" || ext == ".tiff" ||
         ext == ".bmp";
}

std::vector<std::string> list_images(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image(entry.path())) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

PairedDataset PairedDataset::open(const std::string& root, bool unpaired, bool cache) {
  if (!fs::is_directory(root)) throw IngestionError("not a directory: " + root);
  PairedDataset ds;
  ds.root_ = root;
  ds.unpaired_ = unpaired;
  ds.cache_ = cache;
  if (unpaired) {
    ds.names_ = list_images(root);
  } else {
    const fs::path low = fs::path(root) / "low", gt = fs::path(root) / "gt";
    if (!fs::is_directory(low) || !fs::is_directory(gt)) {
      throw IngestionError(root + " must contain low/ and gt/ subdirectories");
    }
    ds.names_ = list_images(low);
    std::vector<std::string> missing;
    for (const auto& name : ds.names_) {
      if (!fs::exists(gt / name)) missing.push_back(name);
    }
    if (!missing.empty()) {
      std::string msg = "missing ground-truth counterpart for:";
      for (const auto& n : missing) msg += " " + n;
      throw IngestionError(msg);
    }
  }
  if (ds.names_.empty()) throw IngestionError("no images found in " + root);
  ds.cached_.resize(ds.names_.size());
  ds.loaded_.assign(ds.names_.size(), false);
  return ds;
}

PairedSample PairedDataset::load(size_t index) {
  if (index >= names_.size()) throw ArgumentError("dataset index out of range");
  if (cache_ && loaded_[index]) return cached_[index];
  PairedSample s;
  s.name = names_[index];
  if (unpaired_) {
    s.low = crop_to_original(load_image((fs::path(root_) / s.name).string()));
    s.gt = s.low;
  } else {
    s.low = crop_to_original(load_image((fs::path(root_) / "low" / s.name).string()));
    s.gt = crop_to_original(load_image((fs::path(root_) / "gt" / s.name).string()));
    if (s.low.height != s.gt.height || s.low.width != s.gt.width) {
      throw IngestionError("low/gt dimensions differ for " + s.name);
    }
  }
  if (cache_) {
    cached_[index] = s;
    loaded_[index] = true;
  }
  return s;
}

PairedSample crop_pair(const PairedSample& pair, int patch, std::mt19937_64& rng) {
  if (patch <= 0) throw ArgumentError("patch size must be positive");
  const ImageTensor low = pad_to_at_least(pair.low, patch, patch);
  const ImageTensor gt = pad_to_at_least(pair.gt, patch, patch);
  std::uniform_int_distribution<int> dy(0, low.height - patch), dx(0, low.width - patch);
  const int y0 = dy(rng), x0 = dx(rng);
  return {crop(low, y0, x0, patch, patch), crop(gt, y0, x0, patch, patch), pair.name};
}

PairIterator::PairIterator(PairedDataset& dataset, int patch, uint64_t seed)
    : dataset_(dataset), patch_(patch), rng_(seed) {}

PairedSample PairIterator::next() {
  std::uniform_int_distribution<size_t> pick(0, dataset_.size() - 1);
  return crop_pair(dataset_.load(pick(rng_)), patch_, rng_);
}

std::pair<torch::Tensor, torch::Tensor> PairIterator::next_batch(int batch) {
  std::vector<torch::Tensor> low, gt;
  for (int b = 0; b < batch; ++b) {
    auto s = next();
    low.push_back(image_to_tensor(s.low));
    gt.push_back(image_to_tensor(s.gt));
  }
  return {torch::cat(low), torch::cat(gt)};
}

}  // namespace lumen
