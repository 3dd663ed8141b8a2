#pragma once

#include <optional>
#include <string>

#include <torch/torch.h>

#include "lumen/cdf.hpp"
#include "lumen/entropy.hpp"
#include "lumen/snr_branch.hpp"
#include "lumen/transforms.hpp"

namespace lumen {

// Training state of the weights.  The SNR branch is only active once joint
// training has started.
enum class ModelStage { kInit, kPretrained, kJoint };

std::string stage_name(ModelStage stage);
ModelStage parse_stage(const std::string& name);

struct EncoderLatents {
  torch::Tensor y0_raw, y0;  // level 0, 1/4 resolution
  torch::Tensor y1_raw, y;   // level 1, 1/16 resolution
  std::optional<SnrFeatures> snr0, snr1;
};

struct ForwardOutput {
  EncoderLatents enc;
  torch::Tensor z, z_hat;
  torch::Tensor y_hat;
  torch::Tensor mu, sigma;
  torch::Tensor likelihood_y, likelihood_z;
  torch::Tensor x_hat;  // unclamped synthesis output
};

class JointModelImpl : public torch::nn::Module {
 public:
  explicit JointModelImpl(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ModelStage stage() const { return stage_; }
  void set_stage(ModelStage stage) { stage_ = stage; }
  // Retargets the weights to another quality level (joint fine-tuning).
  void set_quality(int quality_index);
  bool uses_snr() const { return cfg_.snr_branch && stage_ == ModelStage::kJoint; }

  // ---- named operators ----
  torch::Tensor encode_stage0(const torch::Tensor& x);
  torch::Tensor feature_adapt(int level, const torch::Tensor& y_raw, const torch::Tensor& s_fused);
  torch::Tensor encode_stage1(const torch::Tensor& y0);
  torch::Tensor hyper_encode(const torch::Tensor& y);
  torch::Tensor hyper_decode(const torch::Tensor& z_hat);
  torch::Tensor context_predict(const torch::Tensor& y_hat_causal);
  GaussianParams entropy_parameters(const torch::Tensor& hyper, const torch::Tensor& ctx);
  // Clamped to [0,1]; cropping to the original size is the caller's job.
  torch::Tensor main_decode(const torch::Tensor& y_hat);

  // Two-level encoding of x, SNR-adapted when uses_snr().
  EncoderLatents analyse(const torch::Tensor& x);
  // The same encoders without adaptation, detached.
  std::pair<torch::Tensor, torch::Tensor> teacher_latents(const torch::Tensor& x_gt);

  // Everything downstream of y.  Training passes noise tensors
  // (U(-1/2,1/2) samples shaped like y and z); with no noise the latents
  // are rounded (y without means).
  ForwardOutput latent_path(const torch::Tensor& y, const std::optional<torch::Tensor>& noise_y,
                            const std::optional<torch::Tensor>& noise_z);

  ForwardOutput forward(const torch::Tensor& x, QuantizeMode mode);

  // ---- coder tables ----
  void update_tables();
  bool tables_ready() const { return tables_ready_; }
  void set_tables(CdfTableSet gaussian, CdfTableSet z);
  void invalidate_tables() { tables_ready_ = false; }
  const CdfTableSet& gaussian_tables() const { return gaussian_tables_; }
  const CdfTableSet& z_tables() const { return z_tables_; }

  // ---- submodules ----
  AnalysisStage0& g_a0() { return g_a0_; }
  AnalysisStage1& g_a1() { return g_a1_; }
  FeatureAdapt& adapt(int level) { return level == 0 ? adapt0_ : adapt1_; }
  SnrBranchLevel& snr_level(int level) { return level == 0 ? snr0_ : snr1_; }
  HyperAnalysis& h_a() { return h_a_; }
  HyperSynthesis& h_s() { return h_s_; }
  nn::MaskedConv2d& context() { return context_; }
  EntropyParameters& entropy_params() { return entropy_params_; }
  FactorizedDensity& factorized() { return factorized_; }
  Synthesis& g_s() { return g_s_; }

  // Parameters optimised in the current stage (SNR branch and adaptation
  // heads are excluded before joint training).
  std::vector<torch::Tensor> stage_parameters();

 private:
  ModelConfig cfg_;
  ModelStage stage_ = ModelStage::kInit;
  AnalysisStage0 g_a0_{nullptr};
  AnalysisStage1 g_a1_{nullptr};
  FeatureAdapt adapt0_{nullptr}, adapt1_{nullptr};
  SnrBranchLevel snr0_{nullptr}, snr1_{nullptr};
  HyperAnalysis h_a_{nullptr};
  HyperSynthesis h_s_{nullptr};
  nn::MaskedConv2d context_{nullptr};
  EntropyParameters entropy_params_{nullptr};
  FactorizedDensity factorized_{nullptr};
  Synthesis g_s_{nullptr};
  CdfTableSet gaussian_tables_, z_tables_;
  bool tables_ready_ = false;
};
TORCH_MODULE(JointModel);

// [1, 3, H, W] float tensor of an ImageTensor (storage dims).
torch::Tensor image_to_tensor(const ImageTensor& img);
// Inverse of image_to_tensor for one batch item, clamped to [0,1].
ImageTensor tensor_to_image(const torch::Tensor& t, int orig_h, int orig_w);

}  // namespace lumen
