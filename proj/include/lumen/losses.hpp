#pragma once

#include <string>

#include <torch/torch.h>

namespace lumen {

// Images are compared on the 0-255 scale: p = 2 is the mean squared error,
// p = 1 the mean absolute error.
torch::Tensor distortion(const torch::Tensor& target, const torch::Tensor& rec, int p);

// -sum log2(likelihoods) / pixels.
torch::Tensor rate_bpp(const torch::Tensor& likelihoods, int64_t pixels);

struct LossComponents {
  torch::Tensor total;
  torch::Tensor distortion;
  torch::Tensor rate_y;
  torch::Tensor rate_z;
  torch::Tensor guidance;  // undefined unless guidance is active
};

// L = lambda_d * MSE(x, x_rec) + R_y + R_z.
LossComponents rd_pretrain_loss(const torch::Tensor& x, const torch::Tensor& x_rec,
                                const torch::Tensor& p_y, const torch::Tensor& p_z,
                                double lambda_d);

// L = lambda_d * L1(x_gt, x_hat) + R_y + R_z.
LossComponents joint_loss(const torch::Tensor& x_gt, const torch::Tensor& x_hat,
                          const torch::Tensor& p_y, const torch::Tensor& p_z, double lambda_d);

// mean|y0_gt - y0| + mean|y_gt - y|; the teacher side carries no gradient.
torch::Tensor guidance_loss(const torch::Tensor& y0_gt, const torch::Tensor& y0,
                            const torch::Tensor& y_gt, const torch::Tensor& y);

// Throws TrainingError naming the first non-finite component.
void check_finite(const LossComponents& loss);

}  // namespace lumen
