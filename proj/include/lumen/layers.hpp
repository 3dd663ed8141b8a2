#pragma once

// Building blocks of the analysis/synthesis transforms: GDN, residual blocks
// with stride/upsampling, the simplified attention block and the masked
// convolution used by the context model.

#include <torch/torch.h>

namespace lumen::nn {

torch::nn::Conv2d conv3x3(int in, int out, int stride = 1);
torch::nn::Conv2d conv1x1(int in, int out, int stride = 1);

// Generalized divisive normalisation (inverse = IGDN).
// y_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2); beta and gamma are kept
// non-negative by storing square roots.
class GDNImpl : public torch::nn::Module {
 public:
  GDNImpl(int channels, bool inverse = false);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  bool inverse_;
  torch::Tensor beta_root_;
  torch::Tensor gamma_root_;
};
TORCH_MODULE(GDN);

// 3x3 conv to out*r*r channels followed by pixel shuffle.
class SubpelConvImpl : public torch::nn::Module {
 public:
  SubpelConvImpl(int in, int out, int r);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv_{nullptr};
  int r_;
};
TORCH_MODULE(SubpelConv);

// conv3x3 - LeakyReLU - conv3x3 - LeakyReLU, plus (projected) skip.
class ResidualBlockImpl : public torch::nn::Module {
 public:
  ResidualBlockImpl(int in, int out);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
};
TORCH_MODULE(ResidualBlock);

class ResidualBlockWithStrideImpl : public torch::nn::Module {
 public:
  ResidualBlockWithStrideImpl(int in, int out, int stride = 2);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
  GDN gdn_{nullptr};
};
TORCH_MODULE(ResidualBlockWithStride);

class ResidualBlockUpsampleImpl : public torch::nn::Module {
 public:
  ResidualBlockUpsampleImpl(int in, int out, int upsample = 2);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  SubpelConv subpel_{nullptr}, upsample_{nullptr};
  torch::nn::Conv2d conv_{nullptr};
  GDN igdn_{nullptr};
};
TORCH_MODULE(ResidualBlockUpsample);

// Simplified attention: out = x + trunk(x) * sigmoid(mask(x)).
class AttentionBlockImpl : public torch::nn::Module {
 public:
  explicit AttentionBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential trunk_{nullptr}, mask_{nullptr};
};
TORCH_MODULE(AttentionBlock);

// Convolution whose kernel only sees raster-order predecessors of the
// centre tap (centre excluded).
class MaskedConv2dImpl : public torch::nn::Module {
 public:
  MaskedConv2dImpl(int in, int out, int kernel = 5);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d& conv() { return conv_; }
  const torch::Tensor& mask() const { return mask_; }
  int kernel_size() const { return kernel_; }

 private:
  torch::nn::Conv2d conv_{nullptr};
  torch::Tensor mask_;
  int kernel_;
};
TORCH_MODULE(MaskedConv2d);

inline constexpr double kLeakySlope = 0.01;

inline torch::Tensor lrelu(const torch::Tensor& x) {
  return torch::leaky_relu(x, kLeakySlope);
}

}  // namespace lumen::nn
