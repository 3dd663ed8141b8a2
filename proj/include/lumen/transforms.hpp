#pragma once

#include <array>
#include <string>

#include <torch/torch.h>

#include "lumen/layers.hpp"

namespace lumen {

// Rate-distortion trade-offs for the eight quality levels.
inline constexpr std::array<double, 8> kLambdaSet = {0.0001, 0.0002, 0.0004, 0.0008,
                                                     0.0016, 0.0028, 0.0064, 0.012};

struct ModelConfig {
  int n = 64;  // level-0 channels
  int m = 64;  // bottleneck channels
  int k = 64;  // hyper-latent channels
  int quality_index = 7;
  bool snr_branch = true;
  int attention_heads = 4;
  double snr_threshold = 0.5;
  int snr_kernel = 3;

  // Throws ConfigError when a field is out of range.
  void validate() const;
  double lambda_d() const { return kLambdaSet.at(quality_index); }

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

// g_a0: image -> [N, H/4, W/4]
class AnalysisStage0Impl : public torch::nn::Module {
 public:
  explicit AnalysisStage0Impl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(AnalysisStage0);

// g_a1: [N, H/4, W/4] -> [M, H/16, W/16]
class AnalysisStage1Impl : public torch::nn::Module {
 public:
  explicit AnalysisStage1Impl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(AnalysisStage1);

// y = y_raw * m(s) + a(s), m = 2 sigmoid(.), with zero-initialised output
// convs so the module starts as the identity.
class FeatureAdaptImpl : public torch::nn::Module {
 public:
  explicit FeatureAdaptImpl(int channels);

  torch::Tensor forward(const torch::Tensor& y_raw, const torch::Tensor& s_fused);
  torch::Tensor scale(const torch::Tensor& s_fused);
  torch::Tensor shift(const torch::Tensor& s_fused);

  // Zeroes the final conv of both heads.
  void reset_heads();

  torch::nn::Conv2d& scale_out() { return m2_; }
  torch::nn::Conv2d& shift_out() { return a2_; }

 private:
  int channels_;
  torch::nn::Conv2d m1_{nullptr}, m2_{nullptr}, a1_{nullptr}, a2_{nullptr};
};
TORCH_MODULE(FeatureAdapt);

// h_a: [M, H/16, W/16] -> [K, H/64, W/64]
class HyperAnalysisImpl : public torch::nn::Module {
 public:
  explicit HyperAnalysisImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& y);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(HyperAnalysis);

// h_s: [K, H/64, W/64] -> [2M, H/16, W/16]
class HyperSynthesisImpl : public torch::nn::Module {
 public:
  explicit HyperSynthesisImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& z_hat);
  int out_channels() const { return out_channels_; }

 private:
  torch::nn::Sequential body_{nullptr};
  int out_channels_;
};
TORCH_MODULE(HyperSynthesis);

struct GaussianParams {
  torch::Tensor mu;
  torch::Tensor sigma;
};

// 1x1 conv aggregator over cat(hyper, context) -> (mu, sigma).
class EntropyParametersImpl : public torch::nn::Module {
 public:
  explicit EntropyParametersImpl(int m);
  GaussianParams forward(const torch::Tensor& hyper, const torch::Tensor& ctx);

  // Raw [2M] output; first M channels are mu, the rest pre-softplus sigma.
  torch::Tensor raw(const torch::Tensor& hyper, const torch::Tensor& ctx);
  static GaussianParams split(const torch::Tensor& raw);

  std::array<torch::nn::Conv2d, 3>& layers() { return layers_; }

 private:
  int m_;
  std::array<torch::nn::Conv2d, 3> layers_ = {nullptr, nullptr, nullptr};
};
TORCH_MODULE(EntropyParameters);

// g_s: [M, H/16, W/16] -> [3, H, W] (unclamped)
class SynthesisImpl : public torch::nn::Module {
 public:
  explicit SynthesisImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& y_hat);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(Synthesis);

}  // namespace lumen
