#include "lumen/model.hpp"

#include "lumen/errors.hpp"

namespace lumen {

std::string stage_name(ModelStage stage) {
  switch (stage) {
    case ModelStage::kInit: return "init";
    case ModelStage::kPretrained: return "pretrained";
    case ModelStage::kJoint: return "joint";
  }
  return "init";
}

ModelStage parse_stage(const std::string& name) {
  if (name == "init") return ModelStage::kInit;
  if (name == "pretrained") return ModelStage::kPretrained;
  if (name == "joint") return ModelStage::kJoint;
  throw FormatError("unknown model stage: " + name);
}

JointModelImpl::JointModelImpl(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  g_a0_ = register_module("g_a0", AnalysisStage0(cfg_));
  g_a1_ = register_module("g_a1", AnalysisStage1(cfg_));
  adapt0_ = register_module("adapt0", FeatureAdapt(cfg_.n));
  adapt1_ = register_module("adapt1", FeatureAdapt(cfg_.m));
  snr0_ = register_module("snr0", SnrBranchLevel(cfg_.n, cfg_.attention_heads, cfg_.snr_threshold));
  snr1_ = register_module("snr1", SnrBranchLevel(cfg_.m, cfg_.attention_heads, cfg_.snr_threshold));
  h_a_ = register_module("h_a", HyperAnalysis(cfg_));
  h_s_ = register_module("h_s", HyperSynthesis(cfg_));
  context_ = register_module("context", nn::MaskedConv2d(cfg_.m, 2 * cfg_.m, 5));
  entropy_params_ = register_module("entropy_parameters", EntropyParameters(cfg_.m));
  factorized_ = register_module("factorized", FactorizedDensity(cfg_.k));
  g_s_ = register_module("g_s", Synthesis(cfg_));
}

void JointModelImpl::set_quality(int quality_index) {
  ModelConfig cfg = cfg_;
  cfg.quality_index = quality_index;
  cfg.validate();
  cfg_ = cfg;
}

torch::Tensor JointModelImpl::encode_stage0(const torch::Tensor& x) { return g_a0_(x); }

torch::Tensor JointModelImpl::feature_adapt(int level, const torch::Tensor& y_raw,
                                            const torch::Tensor& s_fused) {
  return adapt(level)(y_raw, s_fused);
}

torch::Tensor JointModelImpl::encode_stage1(const torch::Tensor& y0) { return g_a1_(y0); }

torch::Tensor JointModelImpl::hyper_encode(const torch::Tensor& y) { return h_a_(y); }

torch::Tensor JointModelImpl::hyper_decode(const torch::Tensor& z_hat) { return h_s_(z_hat); }

torch::Tensor JointModelImpl::context_predict(const torch::Tensor& y_hat_causal) {
  return context_(y_hat_causal);
}

GaussianParams JointModelImpl::entropy_parameters(const torch::Tensor& hyper,
                                                  const torch::Tensor& ctx) {
  return entropy_params_(hyper, ctx);
}

torch::Tensor JointModelImpl::main_decode(const torch::Tensor& y_hat) {
  return torch::clamp(g_s_(y_hat), 0.0, 1.0);
}

EncoderLatents JointModelImpl::analyse(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3 || x.size(2) % kDownsampleFactor != 0 ||
      x.size(3) % kDownsampleFactor != 0) {
    throw ArgumentError("model input must be [B, 3, H, W] with H, W multiples of 64");
  }
  EncoderLatents out;
  out.y0_raw = encode_stage0(x);
  if (!uses_snr()) {
    out.y0 = out.y0_raw;
    out.y1_raw = encode_stage1(out.y0);
    out.y = out.y1_raw;
    return out;
  }
  SnrOptions opts;
  opts.kernel_size = cfg_.snr_kernel;
  const SnrPyramid pyr = snr_pyramid(x, opts);
  out.snr0 = snr0_(out.y0_raw, pyr.level0);
  out.y0 = feature_adapt(0, out.y0_raw, out.snr0->fused);
  out.y1_raw = encode_stage1(out.y0);
  out.snr1 = snr1_(out.y1_raw, pyr.level1);
  out.y = feature_adapt(1, out.y1_raw, out.snr1->fused);
  return out;
}

std::pair<torch::Tensor, torch::Tensor> JointModelImpl::teacher_latents(const torch::Tensor& x_gt) {
  torch::NoGradGuard no_grad;
  auto y0 = encode_stage0(x_gt);
  auto y = encode_stage1(y0);
  return {y0.detach(), y.detach()};
}

ForwardOutput JointModelImpl::latent_path(const torch::Tensor& y,
                                          const std::optional<torch::Tensor>& noise_y,
                                          const std::optional<torch::Tensor>& noise_z) {
  ForwardOutput out;
  out.z = hyper_encode(y);
  out.z_hat = noise_z ? out.z + *noise_z : torch::round(out.z);
  out.y_hat = noise_y ? y + *noise_y : torch::round(y);
  auto hyper = hyper_decode(out.z_hat);
  auto params = entropy_parameters(hyper, context_predict(out.y_hat));
  out.mu = params.mu;
  out.sigma = params.sigma;
  out.likelihood_y = gaussian_likelihood(out.y_hat, out.mu, out.sigma);
  out.likelihood_z = factorized_->likelihood(out.z_hat);
  out.x_hat = g_s_(out.y_hat);
  return out;
}

ForwardOutput JointModelImpl::forward(const torch::Tensor& x, QuantizeMode mode) {
  EncoderLatents enc = analyse(x);
  ForwardOutput out;
  if (mode == QuantizeMode::kNoise) {
    auto noise_z_shape = torch::empty({x.size(0), cfg_.k, x.size(2) / 64, x.size(3) / 64},
                                      enc.y.options());
    out = latent_path(enc.y, torch::rand_like(enc.y) - 0.5, torch::rand_like(noise_z_shape) - 0.5);
  } else if (mode == QuantizeMode::kRound) {
    out = latent_path(enc.y, std::nullopt, std::nullopt);
  } else {
    // Straight-through rounding of both latents.
    auto z = hyper_encode(enc.y);
    out = latent_path(enc.y, (quantize(enc.y, QuantizeMode::kSte) - enc.y),
                      (quantize(z, QuantizeMode::kSte) - z));
  }
  out.enc = std::move(enc);
  return out;
}

void JointModelImpl::update_tables() {
  gaussian_tables_ = build_gaussian_tables();
  z_tables_ = factorized_->build_tables();
  tables_ready_ = true;
}

void JointModelImpl::set_tables(CdfTableSet gaussian, CdfTableSet z) {
  gaussian.validate();
  z.validate();
  if (gaussian.size() != static_cast<size_t>(kNumScaleBins)) {
    throw FormatError("gaussian table set must hold one table per scale bin");
  }
  if (z.size() != static_cast<size_t>(cfg_.k)) {
    throw FormatError("hyper-latent table set must hold one table per channel");
  }
  gaussian_tables_ = std::move(gaussian);
  z_tables_ = std::move(z);
  tables_ready_ = true;
}

std::vector<torch::Tensor> JointModelImpl::stage_parameters() {
  if (uses_snr()) return parameters();
  std::vector<torch::Tensor> out;
  for (auto& item : named_parameters()) {
    const auto& key = item.key();
    if (key.rfind("snr", 0) == 0 || key.rfind("adapt", 0) == 0) continue;
    out.push_back(item.value());
  }
  return out;
}

torch::Tensor image_to_tensor(const ImageTensor& img) {
  auto t = torch::empty({1, 3, img.height, img.width}, torch::kFloat);
  auto* dst = t.data_ptr<float>();
  for (size_t i = 0; i < img.data.size(); ++i) dst[i] = static_cast<float>(img.data[i]);
  return t;
}

ImageTensor tensor_to_image(const torch::Tensor& t, int orig_h, int orig_w) {
  auto cpu = torch::nan_to_num(t.detach().to(torch::kDouble), 0.0).clamp(0.0, 1.0).contiguous();
  if (cpu.dim() == 4) cpu = cpu[0];
  ImageTensor img(static_cast<int>(cpu.size(1)), static_cast<int>(cpu.size(2)));
  std::copy_n(cpu.data_ptr<double>(), img.data.size(), img.data.begin());
  img.orig_height = orig_h;
  img.orig_width = orig_w;
  return img;
}

}  // namespace lumen
