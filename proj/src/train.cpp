#include "lumen/train.hpp"

#include <algorithm>
#include <cmath>

#include "lumen/errors.hpp"
#include "lumen/transforms.hpp"

namespace lumen {

TrainStage parse_train_stage(const std::string& name) {
  if (name == "pretrain") return TrainStage::kPretrain;
  if (name == "joint") return TrainStage::kJoint;
  if (name == "guidance") return TrainStage::kGuidance;
  throw ArgumentError("unknown training stage: " + name);
}

std::string train_stage_name(TrainStage stage) {
  switch (stage) {
    case TrainStage::kPretrain: return "pretrain";
    case TrainStage::kJoint: return "joint";
    case TrainStage::kGuidance: return "guidance";
  }
  return "pretrain";
}

void TrainConfig::validate() const {
  if (std::find(kLambdaSet.begin(), kLambdaSet.end(), lambda_d) == kLambdaSet.end()) {
    throw ConfigError("lambda_d must be one of the eight quality levels");
  }
  if (lambda_g && *lambda_g < 0.0) throw ConfigError("lambda_g must be non-negative");
  for (size_t i = 1; i < lr_decay_steps.size(); ++i) {
    if (lr_decay_steps[i] <= lr_decay_steps[i - 1]) {
      throw ConfigError("learning-rate decay steps must be strictly increasing");
    }
  }
  if (batch <= 0 || patch <= 0 || lr <= 0.0) throw ConfigError("batch, patch and lr must be positive");
  if (patch % kDownsampleFactor != 0) throw ConfigError("patch must be a multiple of 64");
}

double lr_at(int64_t iter, const TrainConfig& cfg) {
  if (iter < 0) throw ArgumentError("iteration must be non-negative");
  const auto passed = std::count_if(cfg.lr_decay_steps.begin(), cfg.lr_decay_steps.end(),
                                    [&](int64_t s) { return s <= iter; });
  return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(passed));
}

Trainer::Trainer(JointModel model, TrainConfig cfg, TrainStage stage)
    : model_(std::move(model)), cfg_(std::move(cfg)), stage_(stage) {
  cfg_.validate();
  if (stage_ != TrainStage::kPretrain) {
    if (model_->stage() == ModelStage::kInit) {
      throw StateError("joint training needs pretrained weights");
    }
    model_->set_stage(ModelStage::kJoint);
  }
  params_ = model_->stage_parameters();
  optimizer_ = std::make_unique<torch::optim::Adam>(params_, torch::optim::AdamOptions(cfg_.lr));
  model_->train();
}

LossComponents Trainer::compute_loss(const torch::Tensor& low, const torch::Tensor& gt) {
  if (low.sizes() != gt.sizes()) throw ArgumentError("low and gt batches differ in shape");
  LossComponents loss;
  if (stage_ == TrainStage::kPretrain) {
    auto out = model_->forward(gt, QuantizeMode::kNoise);
    loss = rd_pretrain_loss(gt, out.x_hat, out.likelihood_y, out.likelihood_z, cfg_.lambda_d);
  } else {
    auto out = model_->forward(low, QuantizeMode::kNoise);
    loss = joint_loss(gt, out.x_hat, out.likelihood_y, out.likelihood_z, cfg_.lambda_d);
    if (stage_ == TrainStage::kGuidance) {
      auto [y0_gt, y_gt] = model_->teacher_latents(gt);
      const double lambda_g = cfg_.guidance_weight();
      if (lambda_g > 0.0) {
        loss.guidance = guidance_loss(y0_gt, out.enc.y0, y_gt, out.enc.y);
        loss.total = loss.total + lambda_g * loss.guidance;
      } else {
        torch::NoGradGuard no_grad;
        loss.guidance = guidance_loss(y0_gt, out.enc.y0, y_gt, out.enc.y);
      }
    }
  }
  check_finite(loss);
  return loss;
}

StepReport Trainer::step(const torch::Tensor& low, const torch::Tensor& gt) {
  StepReport r;
  r.iteration = iteration_;
  r.lr = lr_at(iteration_, cfg_);
  for (auto& group : optimizer_->param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(r.lr);
  }
  LossComponents loss = compute_loss(low, gt);
  r.loss = loss.total.item<double>();
  r.distortion = loss.distortion.item<double>();
  r.rate_y = loss.rate_y.item<double>();
  r.rate_z = loss.rate_z.item<double>();
  r.guidance = loss.guidance.defined() ? loss.guidance.item<double>() : 0.0;

  if (cfg_.loss_cap > 0.0) {
    r.cap = cfg_.loss_cap;
  } else if (accepted_ >= cfg_.cap_warmup) {
    r.cap = cfg_.cap_factor * ema_;
  }
  r.skipped = r.cap > 0.0 && r.loss > r.cap;
  if (!r.skipped) {
    optimizer_->zero_grad();
    loss.total.backward();
    if (cfg_.clip_grad_norm > 0.0) torch::nn::utils::clip_grad_norm_(params_, cfg_.clip_grad_norm);
    optimizer_->step();
    ema_ = accepted_ == 0 ? r.loss : cfg_.cap_ema * ema_ + (1.0 - cfg_.cap_ema) * r.loss;
    ++accepted_;
    if (stage_ == TrainStage::kPretrain) model_->set_stage(ModelStage::kPretrained);
    model_->invalidate_tables();
  }
  ++iteration_;
  return r;
}

MetricsLog::MetricsLog(const std::string& path) : out_(path) {
  if (!out_) throw IoError("cannot open metrics log " + path);
  out_ << "iteration,loss,distortion,rate_y,rate_z,guidance,lr,skipped\n";
  out_.precision(10);
}

void MetricsLog::append(const StepReport& r) {
  out_ << r.iteration << ',' << r.loss << ',' << r.distortion << ',' << r.rate_y << ','
       << r.rate_z << ',' << r.guidance << ',' << r.lr << ',' << (r.skipped ? 1 : 0) << '\n';
  out_.flush();
}

}  // namespace lumen
