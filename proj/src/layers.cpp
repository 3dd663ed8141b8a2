#include "lumen/layers.hpp"

namespace lumen::nn {
namespace {

// Residual unit inside the attention block.
class ResidualUnitImpl : public torch::nn::Module {
 public:
  explicit ResidualUnitImpl(int n) {
    a_ = register_module("a", conv1x1(n, n / 2));
    b_ = register_module("b", conv3x3(n / 2, n / 2));
    c_ = register_module("c", conv1x1(n / 2, n));
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto h = torch::relu(a_(x));
    h = torch::relu(b_(h));
    return torch::relu(c_(h) + x);
  }

 private:
  torch::nn::Conv2d a_{nullptr}, b_{nullptr}, c_{nullptr};
};
TORCH_MODULE(ResidualUnit);

}  // namespace

torch::nn::Conv2d conv3x3(int in, int out, int stride) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

torch::nn::Conv2d conv1x1(int in, int out, int stride) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1).stride(stride));
}

GDNImpl::GDNImpl(int channels, bool inverse) : inverse_(inverse) {
  beta_root_ = register_parameter("beta_root", torch::ones({channels}));
  gamma_root_ = register_parameter(
      "gamma_root", std::sqrt(0.1) * torch::eye(channels));
}

torch::Tensor GDNImpl::forward(const torch::Tensor& x) {
  const int64_t c = x.size(1);
  auto beta = beta_root_ * beta_root_ + 1e-6;
  auto gamma = (gamma_root_ * gamma_root_).view({c, c, 1, 1});
  auto norm = torch::conv2d(x * x, gamma, beta);
  return inverse_ ? x * torch::sqrt(norm) : x * torch::rsqrt(norm);
}

SubpelConvImpl::SubpelConvImpl(int in, int out, int r) : r_(r) {
  conv_ = register_module("conv", conv3x3(in, out * r * r));
}

torch::Tensor SubpelConvImpl::forward(const torch::Tensor& x) {
  return torch::pixel_shuffle(conv_(x), r_);
}

ResidualBlockImpl::ResidualBlockImpl(int in, int out) {
  conv1_ = register_module("conv1", conv3x3(in, out));
  conv2_ = register_module("conv2", conv3x3(out, out));
  if (in != out) skip_ = register_module("skip", conv1x1(in, out));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  auto identity = skip_ ? skip_(x) : x;
  auto h = lrelu(conv1_(x));
  h = lrelu(conv2_(h));
  return h + identity;
}

ResidualBlockWithStrideImpl::ResidualBlockWithStrideImpl(int in, int out, int stride) {
  conv1_ = register_module("conv1", conv3x3(in, out, stride));
  conv2_ = register_module("conv2", conv3x3(out, out));
  gdn_ = register_module("gdn", GDN(out));
  if (stride != 1 || in != out) skip_ = register_module("skip", conv1x1(in, out, stride));
}

torch::Tensor ResidualBlockWithStrideImpl::forward(const torch::Tensor& x) {
  auto identity = skip_ ? skip_(x) : x;
  auto h = lrelu(conv1_(x));
  h = gdn_(conv2_(h));
  return h + identity;
}

ResidualBlockUpsampleImpl::ResidualBlockUpsampleImpl(int in, int out, int upsample) {
  subpel_ = register_module("subpel", SubpelConv(in, out, upsample));
  conv_ = register_module("conv", conv3x3(out, out));
  igdn_ = register_module("igdn", GDN(out, /*inverse=*/true));
  upsample_ = register_module("upsample", SubpelConv(in, out, upsample));
}

torch::Tensor ResidualBlockUpsampleImpl::forward(const torch::Tensor& x) {
  auto h = lrelu(subpel_(x));
  h = igdn_(conv_(h));
  return h + upsample_(x);
}

AttentionBlockImpl::AttentionBlockImpl(int channels) {
  trunk_ = register_module(
      "trunk", torch::nn::Sequential(ResidualUnit(channels), ResidualUnit(channels),
                                     ResidualUnit(channels)));
  mask_ = register_module(
      "mask", torch::nn::Sequential(ResidualUnit(channels), ResidualUnit(channels),
                                    ResidualUnit(channels), conv1x1(channels, channels)));
}

torch::Tensor AttentionBlockImpl::forward(const torch::Tensor& x) {
  return x + trunk_->forward(x) * torch::sigmoid(mask_->forward(x));
}

MaskedConv2dImpl::MaskedConv2dImpl(int in, int out, int kernel) : kernel_(kernel) {
  conv_ = register_module(
      "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel).padding(kernel / 2)));
  auto mask = torch::ones({1, 1, kernel, kernel});
  const int c = kernel / 2;
  // Zero the centre and everything after it in raster order.
  mask.index_put_({0, 0, c, torch::indexing::Slice(c, torch::indexing::None)}, 0.0);
  mask.index_put_({0, 0, torch::indexing::Slice(c + 1, torch::indexing::None)}, 0.0);
  mask_ = register_buffer("mask", mask);
}

torch::Tensor MaskedConv2dImpl::forward(const torch::Tensor& x) {
  return torch::conv2d(x, conv_->weight * mask_, conv_->bias, 1, kernel_ / 2);
}

}  // namespace lumen::nn
