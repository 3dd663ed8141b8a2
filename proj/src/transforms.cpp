#include "lumen/transforms.hpp"

#include "json.hpp"

#include "lumen/entropy.hpp"
#include "lumen/errors.hpp"

namespace lumen {
namespace {

torch::nn::Functional lrelu_layer() {
  return torch::nn::Functional([](const torch::Tensor& x) { return nn::lrelu(x); });
}

void check_grid(const torch::Tensor& x, int64_t channels, const char* what) {
  if (x.dim() != 4 || x.size(1) != channels) {
    throw ArgumentError(std::string(what) + ": expected [B, " + std::to_string(channels) +
                        ", H, W]");
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (n < 8 || m < 8 || k < 8) throw ConfigError("channel counts must be >= 8");
  if (quality_index < 0 || quality_index > 7) throw ConfigError("quality index must be in [0, 7]");
  if (attention_heads <= 0 || n % attention_heads != 0 || m % attention_heads != 0) {
    throw ConfigError("attention heads must divide N and M");
  }
  if (snr_threshold < 0.0 || snr_threshold > 1.0) throw ConfigError("snr threshold must be in [0, 1]");
  if (snr_kernel < 3 || snr_kernel % 2 == 0) throw ConfigError("snr kernel must be odd and >= 3");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j = {{"n", n},
                      {"m", m},
                      {"k", k},
                      {"quality_index", quality_index},
                      {"snr_branch", snr_branch},
                      {"attention_heads", attention_heads},
                      {"snr_threshold", snr_threshold},
                      {"snr_kernel", snr_kernel}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig cfg;
  try {
    auto j = nlohmann::json::parse(text);
    cfg.n = j.at("n");
    cfg.m = j.at("m");
    cfg.k = j.at("k");
    cfg.quality_index = j.at("quality_index");
    cfg.snr_branch = j.at("snr_branch");
    cfg.attention_heads = j.at("attention_heads");
    cfg.snr_threshold = j.at("snr_threshold");
    cfg.snr_kernel = j.at("snr_kernel");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

AnalysisStage0Impl::AnalysisStage0Impl(const ModelConfig& cfg) {
  body_ = register_module(
      "body", torch::nn::Sequential(nn::ResidualBlockWithStride(3, cfg.n, 2),
                                    nn::ResidualBlock(cfg.n, cfg.n),
                                    nn::ResidualBlockWithStride(cfg.n, cfg.n, 2),
                                    nn::ResidualBlock(cfg.n, cfg.n)));
}

torch::Tensor AnalysisStage0Impl::forward(const torch::Tensor& x) {
  check_grid(x, 3, "encode_stage0");
  return body_->forward(x);
}

AnalysisStage1Impl::AnalysisStage1Impl(const ModelConfig& cfg) {
  body_ = register_module(
      "body", torch::nn::Sequential(nn::ResidualBlockWithStride(cfg.n, cfg.n, 2),
                                    nn::ResidualBlock(cfg.n, cfg.n),
                                    nn::AttentionBlock(cfg.n),
                                    nn::conv3x3(cfg.n, cfg.m, 2),
                                    nn::AttentionBlock(cfg.m)));
}

torch::Tensor AnalysisStage1Impl::forward(const torch::Tensor& x) {
  return body_->forward(x);
}

FeatureAdaptImpl::FeatureAdaptImpl(int channels) : channels_(channels) {
  m1_ = register_module("scale1", nn::conv3x3(channels, channels));
  m2_ = register_module("scale2", nn::conv3x3(channels, channels));
  a1_ = register_module("shift1", nn::conv3x3(channels, channels));
  a2_ = register_module("shift2", nn::conv3x3(channels, channels));
  reset_heads();
}

void FeatureAdaptImpl::reset_heads() {
  torch::NoGradGuard no_grad;
  for (auto* conv : {&m2_, &a2_}) {
    (*conv)->weight.zero_();
    (*conv)->bias.zero_();
  }
}

torch::Tensor FeatureAdaptImpl::scale(const torch::Tensor& s_fused) {
  return 2.0 * torch::sigmoid(m2_(nn::lrelu(m1_(s_fused))));
}

torch::Tensor FeatureAdaptImpl::shift(const torch::Tensor& s_fused) {
  return a2_(nn::lrelu(a1_(s_fused)));
}

torch::Tensor FeatureAdaptImpl::forward(const torch::Tensor& y_raw,
                                        const torch::Tensor& s_fused) {
  check_grid(y_raw, channels_, "feature_adapt");
  if (s_fused.sizes() != y_raw.sizes()) {
    throw ArgumentError("feature_adapt: fused features do not match y_raw");
  }
  return y_raw * scale(s_fused) + shift(s_fused);
}

HyperAnalysisImpl::HyperAnalysisImpl(const ModelConfig& cfg) {
  body_ = register_module(
      "body", torch::nn::Sequential(nn::conv3x3(cfg.m, cfg.k), lrelu_layer(),
                                    nn::conv3x3(cfg.k, cfg.k), lrelu_layer(),
                                    nn::conv3x3(cfg.k, cfg.k, 2), lrelu_layer(),
                                    nn::conv3x3(cfg.k, cfg.k), lrelu_layer(),
                                    nn::conv3x3(cfg.k, cfg.k, 2)));
}

torch::Tensor HyperAnalysisImpl::forward(const torch::Tensor& y) { return body_->forward(y); }

HyperSynthesisImpl::HyperSynthesisImpl(const ModelConfig& cfg) : out_channels_(2 * cfg.m) {
  const int mid = cfg.m * 3 / 2;
  body_ = register_module(
      "body", torch::nn::Sequential(nn::conv3x3(cfg.k, cfg.m), lrelu_layer(),
                                    nn::SubpelConv(cfg.m, cfg.m, 2), lrelu_layer(),
                                    nn::conv3x3(cfg.m, mid), lrelu_layer(),
                                    nn::SubpelConv(mid, mid, 2), lrelu_layer(),
                                    nn::conv3x3(mid, out_channels_)));
}

torch::Tensor HyperSynthesisImpl::forward(const torch::Tensor& z_hat) {
  return body_->forward(z_hat);
}

EntropyParametersImpl::EntropyParametersImpl(int m) : m_(m) {
  const int w0 = 4 * m, w1 = 10 * m / 3, w2 = 8 * m / 3;
  layers_[0] = register_module("conv0", nn::conv1x1(w0, w1));
  layers_[1] = register_module("conv1", nn::conv1x1(w1, w2));
  layers_[2] = register_module("conv2", nn::conv1x1(w2, 2 * m));
}

torch::Tensor EntropyParametersImpl::raw(const torch::Tensor& hyper, const torch::Tensor& ctx) {
  check_grid(hyper, 2 * m_, "entropy_parameters (hyper)");
  check_grid(ctx, 2 * m_, "entropy_parameters (context)");
  auto h = nn::lrelu(layers_[0](torch::cat({hyper, ctx}, 1)));
  h = nn::lrelu(layers_[1](h));
  return layers_[2](h);
}

GaussianParams EntropyParametersImpl::split(const torch::Tensor& raw) {
  auto parts = raw.chunk(2, 1);
  return {parts[0], torch::clamp_min(torch::softplus(parts[1]), kSigmaMin)};
}

GaussianParams EntropyParametersImpl::forward(const torch::Tensor& hyper,
                                              const torch::Tensor& ctx) {
  return split(raw(hyper, ctx));
}

SynthesisImpl::SynthesisImpl(const ModelConfig& cfg) {
  body_ = register_module(
      "body", torch::nn::Sequential(nn::AttentionBlock(cfg.m),
                                    nn::ResidualBlock(cfg.m, cfg.n),
                                    nn::ResidualBlockUpsample(cfg.n, cfg.n, 2),
                                    nn::ResidualBlock(cfg.n, cfg.n),
                                    nn::ResidualBlockUpsample(cfg.n, cfg.n, 2),
                                    nn::AttentionBlock(cfg.n),
                                    nn::ResidualBlock(cfg.n, cfg.n),
                                    nn::ResidualBlockUpsample(cfg.n, cfg.n, 2),
                                    nn::ResidualBlock(cfg.n, cfg.n),
                                    nn::SubpelConv(cfg.n, 3, 2)));
}

torch::Tensor SynthesisImpl::forward(const torch::Tensor& y_hat) { return body_->forward(y_hat); }

}  // namespace lumen
