#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "lumen/image.hpp"

namespace lumen {

struct PairedSample {
  ImageTensor low;
  ImageTensor gt;
  std::string name;
};

// Image pairs from <root>/low and <root>/gt with matching file names, or,
// in unpaired mode, every image directly under <root> used as both sides.
class PairedDataset {
 public:
  // Throws IngestionError when a low image has no gt counterpart (the
  // message lists the file names), when dims disagree, or when the
  // directory holds no images.
  static PairedDataset open(const std::string& root, bool unpaired = false,
                            bool cache = true);

  size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  bool unpaired() const { return unpaired_; }

  // Full-size pair, unpadded.
  PairedSample load(size_t index);

 private:
  std::string root_;
  bool unpaired_ = false;
  bool cache_ = true;
  std::vector<std::string> names_;
  std::vector<PairedSample> cached_;
  std::vector<bool> loaded_;
};

// Seeded stream of co-located random patches.  Images smaller than the
// patch are edge-padded first.
class PairIterator {
 public:
  PairIterator(PairedDataset& dataset, int patch, uint64_t seed);

  PairedSample next();

  // Stacks `batch` samples into [B, 3, patch, patch] float tensors.
  std::pair<torch::Tensor, torch::Tensor> next_batch(int batch);

 private:
  PairedDataset& dataset_;
  int patch_;
  std::mt19937_64 rng_;
};

// Random co-located crop of a pair (already padded to >= patch).
PairedSample crop_pair(const PairedSample& pair, int patch, std::mt19937_64& rng);

}  // namespace lumen
