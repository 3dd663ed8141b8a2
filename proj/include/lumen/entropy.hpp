#pragma once

#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "lumen/cdf.hpp"

namespace lumen {

inline constexpr double kLikelihoodFloor = 1e-9;
inline constexpr double kSigmaMin = 0.11;

enum class QuantizeMode { kNoise, kRound, kSte };

// "noise" | "round" | "ste"; anything else throws ArgumentError.
QuantizeMode parse_quantize_mode(const std::string& name);

// noise: v + U(-1/2, 1/2); round: round(v - means) + means; ste: the round
// value in the forward pass with an identity gradient.  Absent means are 0.
torch::Tensor quantize(const torch::Tensor& v, QuantizeMode mode,
                       const std::optional<torch::Tensor>& means = std::nullopt);

// Probability mass of unit bins centred on y_hat under N(mu, sigma^2),
// floored at kLikelihoodFloor.
torch::Tensor gaussian_likelihood(const torch::Tensor& y_hat, const torch::Tensor& mu,
                                  const torch::Tensor& sigma);

// -sum log2(p).
torch::Tensor rate_bits(const torch::Tensor& likelihoods);

// Learned per-channel univariate density for the hyper-latent: a monotone
// CDF c(v) = sigmoid(f_K(...f_1(v))) built from composed elementwise maps
// with non-negative slopes.
class FactorizedDensityImpl : public torch::nn::Module {
 public:
  explicit FactorizedDensityImpl(int channels, std::vector<int> filters = {3, 3, 3},
                                 double init_scale = 10.0);

  // x: [C, 1, N] -> logits of the CDF at each value, same shape.
  torch::Tensor logits_cumulative(const torch::Tensor& x) const;

  // p(v) = c(v + 1/2) - c(v - 1/2) for z_hat of shape [B, C, H, W], floored.
  torch::Tensor likelihood(const torch::Tensor& z_hat) const;

  int channels() const { return channels_; }

  // One coder table per channel over the values whose neighbourhood holds
  // non-negligible mass (tail threshold per side), plus escape.
  CdfTableSet build_tables(int precision = kCdfPrecision, double tail = 1e-6,
                           int search_radius = 512) const;

 private:
  int channels_;
  std::vector<int> filters_;
  std::vector<torch::Tensor> matrices_, biases_, factors_;
};
TORCH_MODULE(FactorizedDensity);

}  // namespace lumen
