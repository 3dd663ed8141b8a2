#pragma once

#include <utility>

#include <torch/torch.h>

#include "lumen/image.hpp"
#include "lumen/snr.hpp"

namespace lumen {

// Normalised SNR maps of a batch, resized to the two feature levels.
struct SnrPyramid {
  torch::Tensor level0;  // [B, 1, H/4, W/4]
  torch::Tensor level1;  // [B, 1, H/16, W/16]
};

// x: [B, 3, H, W] in [0,1].  Computes, normalises and resizes the SNR map
// of every batch item; the result carries no gradient.
SnrPyramid snr_pyramid(const torch::Tensor& x, const SnrOptions& opts = {});

// f_s * s + f_l * (1 - s), s broadcast over channels.  Throws ArgumentError
// when the shapes disagree.
torch::Tensor snr_fuse(const torch::Tensor& f_s, const torch::Tensor& f_l,
                       const torch::Tensor& s_resized);

struct SnrFeatures {
  torch::Tensor f_s;        // local features
  torch::Tensor f_l;        // non-local features
  torch::Tensor s_resized;  // [B, 1, h, w] in [0,1]
  torch::Tensor fused;
};

// Two residual blocks (conv - LeakyReLU - conv, identity skip).
class LocalFeaturesImpl : public torch::nn::Module {
 public:
  explicit LocalFeaturesImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);
  int channels() const { return channels_; }

  // Zeroes the second conv of each block so the stack is the identity.
  void zero_last_convs();

 private:
  int channels_;
  std::vector<torch::nn::Conv2d> first_, second_;
};
TORCH_MODULE(LocalFeatures);

// Multi-head self-attention over spatial tokens in which tokens whose
// normalised SNR is below `threshold` are excluded as keys (they still
// query).  When every key of an image is excluded the mask is dropped.
class SnrAttentionImpl : public torch::nn::Module {
 public:
  SnrAttentionImpl(int channels, int heads, double threshold);

  torch::Tensor forward(const torch::Tensor& feat, const torch::Tensor& s_resized);

  // Scaled dot-product attention with a key mask.  q, k, v: [B, heads, T, d];
  // key_valid: [B, T] bool.  Returns (output [B, heads, T, d], weights
  // [B, heads, T, T]) when `want_weights`, otherwise an undefined weights
  // tensor; queries are processed in blocks when no gradient is recorded.
  static std::pair<torch::Tensor, torch::Tensor> attend(const torch::Tensor& q,
                                                        const torch::Tensor& k,
                                                        const torch::Tensor& v,
                                                        const torch::Tensor& key_valid,
                                                        bool want_weights = false);

  // [B, 1, h, w] SNR -> [B, h*w] key validity, with the all-masked fallback.
  torch::Tensor key_mask(const torch::Tensor& s_resized) const;

  torch::nn::Linear& q_proj() { return q_; }
  torch::nn::Linear& k_proj() { return k_; }
  torch::nn::Linear& v_proj() { return v_; }
  torch::nn::Linear& out_proj() { return out_; }
  int heads() const { return heads_; }

 private:
  int channels_, heads_;
  double threshold_;
  torch::nn::Linear q_{nullptr}, k_{nullptr}, v_{nullptr}, out_{nullptr};
};
TORCH_MODULE(SnrAttention);

// One level of the SNR-aware branch: a 3x3 conv embeds the compressed-domain
// features together with the resized SNR map, then local and non-local
// features are extracted and fused.
class SnrBranchLevelImpl : public torch::nn::Module {
 public:
  SnrBranchLevelImpl(int channels, int heads, double threshold);

  SnrFeatures forward(const torch::Tensor& y_raw, const torch::Tensor& s_resized);

  torch::Tensor embed(const torch::Tensor& y_raw, const torch::Tensor& s_resized);
  torch::Tensor local_features(const torch::Tensor& s_feat);
  torch::Tensor nonlocal_features(const torch::Tensor& s_feat, const torch::Tensor& s_resized);

  LocalFeatures& local() { return local_; }
  SnrAttention& attention() { return attention_; }

 private:
  int channels_;
  torch::nn::Conv2d embed_{nullptr};
  LocalFeatures local_{nullptr};
  SnrAttention attention_{nullptr};
};
TORCH_MODULE(SnrBranchLevel);

}  // namespace lumen
