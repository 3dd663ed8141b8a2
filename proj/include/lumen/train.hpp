#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "lumen/losses.hpp"
#include "lumen/model.hpp"

namespace lumen {

enum class TrainStage { kPretrain, kJoint, kGuidance };

TrainStage parse_train_stage(const std::string& name);
std::string train_stage_name(TrainStage stage);

struct TrainConfig {
  double lambda_d = 0.0016;
  std::optional<double> lambda_g;  // guidance weight; lambda_d / 10 when unset
  int batch = 8;
  int patch = 256;
  int64_t total_iters = 900000;
  int64_t pretrain_iters = 150000;
  double lr = 1e-4;
  std::vector<int64_t> lr_decay_steps = {500000, 600000, 700000, 850000};
  double lr_decay = 0.5;
  // Fixed cap when > 0; otherwise cap_factor x EMA of accepted losses once
  // cap_warmup steps have been accepted.
  double loss_cap = 0.0;
  double cap_factor = 5.0;
  double cap_ema = 0.9;
  int cap_warmup = 10;
  double clip_grad_norm = 1.0;  // 0 disables
  uint64_t seed = 0;

  // Throws ConfigError: lambda_d outside the quality set, decay steps not
  // strictly increasing, non-positive sizes.
  void validate() const;
  double guidance_weight() const { return lambda_g.value_or(lambda_d / 10.0); }
};

// lr * decay^(number of decay steps <= iter)
double lr_at(int64_t iter, const TrainConfig& cfg);

struct StepReport {
  int64_t iteration = 0;
  double loss = 0.0;
  double distortion = 0.0;
  double rate_y = 0.0;
  double rate_z = 0.0;
  double guidance = 0.0;
  double lr = 0.0;
  double cap = 0.0;  // 0 while no cap is active
  bool skipped = false;
};

class Trainer {
 public:
  // Joint and guidance stages need pretrained weights (StateError).
  Trainer(JointModel model, TrainConfig cfg, TrainStage stage);

  // low, gt: [B, 3, P, P] in [0,1].  Pretraining codes gt onto itself.
  StepReport step(const torch::Tensor& low, const torch::Tensor& gt);

  // Loss components for a batch without touching parameters or the RNG
  // beyond the quantization noise.
  LossComponents compute_loss(const torch::Tensor& low, const torch::Tensor& gt);

  int64_t iteration() const { return iteration_; }
  TrainStage stage() const { return stage_; }
  const TrainConfig& config() const { return cfg_; }
  JointModel& model() { return model_; }
  torch::optim::Adam& optimizer() { return *optimizer_; }

 private:
  JointModel model_;
  TrainConfig cfg_;
  TrainStage stage_;
  std::vector<torch::Tensor> params_;
  std::unique_ptr<torch::optim::Adam> optimizer_;
  int64_t iteration_ = 0;
  int64_t accepted_ = 0;
  double ema_ = 0.0;
};

// CSV: iteration,loss,distortion,rate_y,rate_z,guidance,lr,skipped
class MetricsLog {
 public:
  explicit MetricsLog(const std::string& path);
  void append(const StepReport& r);

 private:
  std::ofstream out_;
};

}  // namespace lumen
