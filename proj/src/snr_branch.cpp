#include "lumen/snr_branch.hpp"

#include <cmath>
#include <limits>

#include "lumen/errors.hpp"
#include "lumen/layers.hpp"

namespace lumen {
namespace {

// Queries per block when attention runs without autograd.
constexpr int64_t kQueryBlock = 1024;

torch::Tensor plane_to_tensor(const Plane& p) {
  auto t = torch::empty({1, 1, p.height, p.width}, torch::kFloat);
  auto* dst = t.data_ptr<float>();
  for (size_t i = 0; i < p.size(); ++i) dst[i] = static_cast<float>(p.data[i]);
  return t;
}

ImageTensor item_image(const torch::Tensor& x) {
  auto cpu = x.detach().to(torch::kDouble).contiguous();
  ImageTensor img(static_cast<int>(cpu.size(1)), static_cast<int>(cpu.size(2)));
  std::copy_n(cpu.data_ptr<double>(), img.data.size(), img.data.begin());
  return img;
}

}  // namespace

SnrPyramid snr_pyramid(const torch::Tensor& x, const SnrOptions& opts) {
  if (x.dim() != 4 || x.size(1) != 3) throw ArgumentError("snr_pyramid expects [B,3,H,W]");
  const int h = static_cast<int>(x.size(2)), w = static_cast<int>(x.size(3));
  if (h % 16 != 0 || w % 16 != 0) {
    throw ArgumentError("snr_pyramid: spatial dims must be multiples of 16");
  }
  std::vector<torch::Tensor> l0, l1;
  for (int64_t b = 0; b < x.size(0); ++b) {
    const Plane s = normalize_snr(compute_snr_map(item_image(x[b]), opts), opts.s_max);
    l0.push_back(plane_to_tensor(resize_map(s, h / 4, w / 4)));
    l1.push_back(plane_to_tensor(resize_map(s, h / 16, w / 16)));
  }
  const auto opts_t = x.options().requires_grad(false);
  return {torch::cat(l0).to(opts_t), torch::cat(l1).to(opts_t)};
}

torch::Tensor snr_fuse(const torch::Tensor& f_s, const torch::Tensor& f_l,
                       const torch::Tensor& s_resized) {
  if (f_s.sizes() != f_l.sizes() || f_s.dim() != 4 || s_resized.dim() != 4 ||
      s_resized.size(0) != f_s.size(0) || s_resized.size(1) != 1 ||
      s_resized.size(2) != f_s.size(2) || s_resized.size(3) != f_s.size(3)) {
    throw ArgumentError("snr_fuse: shape mismatch");
  }
  return f_s * s_resized + f_l * (1.0 - s_resized);
}

LocalFeaturesImpl::LocalFeaturesImpl(int channels) : channels_(channels) {
  for (int i = 0; i < 2; ++i) {
    first_.push_back(register_module("block" + std::to_string(i) + "_conv1",
                                     nn::conv3x3(channels, channels)));
    second_.push_back(register_module("block" + std::to_string(i) + "_conv2",
                                      nn::conv3x3(channels, channels)));
  }
}

torch::Tensor LocalFeaturesImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != channels_) {
    throw ArgumentError("local_features: expected " + std::to_string(channels_) + " channels");
  }
  auto h = x;
  for (size_t i = 0; i < first_.size(); ++i) {
    h = h + second_[i](nn::lrelu(first_[i](h)));
  }
  return h;
}

void LocalFeaturesImpl::zero_last_convs() {
  torch::NoGradGuard no_grad;
  for (auto& conv : second_) {
    conv->weight.zero_();
    conv->bias.zero_();
  }
}

SnrAttentionImpl::SnrAttentionImpl(int channels, int heads, double threshold)
    : channels_(channels), heads_(heads), threshold_(threshold) {
  if (heads <= 0 || channels % heads != 0) {
    throw ArgumentError("attention heads must divide the channel count");
  }
  q_ = register_module("q", torch::nn::Linear(channels, channels));
  k_ = register_module("k", torch::nn::Linear(channels, channels));
  v_ = register_module("v", torch::nn::Linear(channels, channels));
  out_ = register_module("out", torch::nn::Linear(channels, channels));
}

torch::Tensor SnrAttentionImpl::key_mask(const torch::Tensor& s_resized) const {
  auto valid = (s_resized.flatten(1) >= threshold_);
  auto none = valid.logical_not().all(1, /*keepdim=*/true);
  return valid.logical_or(none);
}

std::pair<torch::Tensor, torch::Tensor> SnrAttentionImpl::attend(
    const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v,
    const torch::Tensor& key_valid, bool want_weights) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.size(-1)));
  // [B, 1, 1, T]: additive -inf on excluded keys.
  auto bias = torch::zeros(key_valid.sizes(), q.options())
                  .masked_fill(key_valid.logical_not(), -std::numeric_limits<double>::infinity())
                  .view({key_valid.size(0), 1, 1, key_valid.size(1)});
  auto kt = k.transpose(-2, -1);
  const int64_t t = q.size(2);
  if (want_weights || torch::GradMode::is_enabled() || t <= kQueryBlock) {
    auto weights = torch::softmax(torch::matmul(q, kt) * scale + bias, -1);
    auto out = torch::matmul(weights, v);
    return {out, want_weights ? weights : torch::Tensor()};
  }
  std::vector<torch::Tensor> blocks;
  for (int64_t start = 0; start < t; start += kQueryBlock) {
    auto qb = q.narrow(2, start, std::min(kQueryBlock, t - start));
    blocks.push_back(torch::matmul(torch::softmax(torch::matmul(qb, kt) * scale + bias, -1), v));
  }
  return {torch::cat(blocks, 2), torch::Tensor()};
}

torch::Tensor SnrAttentionImpl::forward(const torch::Tensor& feat,
                                        const torch::Tensor& s_resized) {
  if (feat.dim() != 4 || feat.size(1) != channels_) {
    throw ArgumentError("nonlocal_features: channel mismatch");
  }
  if (s_resized.dim() != 4 || s_resized.size(0) != feat.size(0) ||
      s_resized.size(2) != feat.size(2) || s_resized.size(3) != feat.size(3)) {
    throw ArgumentError("nonlocal_features: SNR map does not match the feature grid");
  }
  const int64_t b = feat.size(0), h = feat.size(2), w = feat.size(3);
  const int64_t d = channels_ / heads_;
  auto tokens = feat.flatten(2).transpose(1, 2);  // [B, T, C]
  auto split = [&](const torch::Tensor& t) {
    return t.view({b, h * w, heads_, d}).transpose(1, 2);  // [B, heads, T, d]
  };
  auto [attended, weights] =
      attend(split(q_(tokens)), split(k_(tokens)), split(v_(tokens)), key_mask(s_resized));
  (void)weights;
  auto merged = attended.transpose(1, 2).reshape({b, h * w, channels_});
  return out_(merged).transpose(1, 2).reshape({b, channels_, h, w});
}

SnrBranchLevelImpl::SnrBranchLevelImpl(int channels, int heads, double threshold)
    : channels_(channels) {
  embed_ = register_module("embed", nn::conv3x3(channels + 1, channels));
  local_ = register_module("local", LocalFeatures(channels));
  attention_ = register_module("attention", SnrAttention(channels, heads, threshold));
}

torch::Tensor SnrBranchLevelImpl::embed(const torch::Tensor& y_raw,
                                        const torch::Tensor& s_resized) {
  if (y_raw.dim() != 4 || y_raw.size(1) != channels_ || s_resized.dim() != 4 ||
      s_resized.size(2) != y_raw.size(2) || s_resized.size(3) != y_raw.size(3)) {
    throw ArgumentError("SNR branch: feature/SNR shape mismatch");
  }
  return embed_(torch::cat({y_raw, s_resized}, 1));
}

torch::Tensor SnrBranchLevelImpl::local_features(const torch::Tensor& s_feat) {
  return local_(s_feat);
}

torch::Tensor SnrBranchLevelImpl::nonlocal_features(const torch::Tensor& s_feat,
                                                    const torch::Tensor& s_resized) {
  return attention_(s_feat, s_resized);
}

SnrFeatures SnrBranchLevelImpl::forward(const torch::Tensor& y_raw,
                                        const torch::Tensor& s_resized) {
  SnrFeatures out;
  out.s_resized = s_resized;
  auto s_feat = embed(y_raw, s_resized);
  out.f_s = local_features(s_feat);
  out.f_l = nonlocal_features(s_feat, s_resized);
  out.fused = snr_fuse(out.f_s, out.f_l, s_resized);
  return out;
}

}  // namespace lumen
