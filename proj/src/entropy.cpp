#include "lumen/entropy.hpp"

#include <cmath>

#include "lumen/errors.hpp"

namespace lumen {
namespace {

torch::Tensor standard_cdf(const torch::Tensor& x) {
  return 0.5 * torch::erfc(x * (-1.0 / std::sqrt(2.0)));
}

}  // namespace

QuantizeMode parse_quantize_mode(const std::string& name) {
  if (name == "noise") return QuantizeMode::kNoise;
  if (name == "round") return QuantizeMode::kRound;
  if (name == "ste") return QuantizeMode::kSte;
  throw ArgumentError("unknown quantization mode: " + name);
}

torch::Tensor quantize(const torch::Tensor& v, QuantizeMode mode,
                       const std::optional<torch::Tensor>& means) {
  if (means && means->sizes() != v.sizes()) {
    throw ArgumentError("quantize: means shape does not match input");
  }
  switch (mode) {
    case QuantizeMode::kNoise:
      return v + (torch::rand_like(v) - 0.5);
    case QuantizeMode::kRound:
      return means ? torch::round(v - *means) + *means : torch::round(v);
    case QuantizeMode::kSte: {
      auto rounded = means ? torch::round(v - *means) + *means : torch::round(v);
      return v + (rounded - v).detach();
    }
  }
  throw ArgumentError("quantize: bad mode");
}

torch::Tensor gaussian_likelihood(const torch::Tensor& y_hat, const torch::Tensor& mu,
                                  const torch::Tensor& sigma) {
  // Evaluated on the lower tail of the symmetric density for accuracy.
  auto values = torch::abs(y_hat - mu);
  auto upper = standard_cdf((0.5 - values) / sigma);
  auto lower = standard_cdf((-0.5 - values) / sigma);
  return torch::clamp_min(upper - lower, kLikelihoodFloor);
}

torch::Tensor rate_bits(const torch::Tensor& likelihoods) {
  return -torch::log2(likelihoods).sum();
}

FactorizedDensityImpl::FactorizedDensityImpl(int channels, std::vector<int> filters,
                                             double init_scale)
    : channels_(channels), filters_(std::move(filters)) {
  std::vector<int> dims = {1};
  dims.insert(dims.end(), filters_.begin(), filters_.end());
  dims.push_back(1);
  const double scale = std::pow(init_scale, 1.0 / (dims.size() - 1));
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    const double init = std::log(std::expm1(1.0 / scale / dims[i + 1]));
    matrices_.push_back(register_parameter(
        "matrix" + std::to_string(i), torch::full({channels, dims[i + 1], dims[i]}, init)));
    biases_.push_back(register_parameter(
        "bias" + std::to_string(i), torch::rand({channels, dims[i + 1], 1}) - 0.5));
    if (i + 2 < dims.size()) {
      factors_.push_back(register_parameter(
          "factor" + std::to_string(i), torch::zeros({channels, dims[i + 1], 1})));
    }
  }
}

torch::Tensor FactorizedDensityImpl::logits_cumulative(const torch::Tensor& x) const {
  auto logits = x;
  const auto dtype = x.scalar_type();
  for (size_t i = 0; i < matrices_.size(); ++i) {
    logits = torch::matmul(torch::softplus(matrices_[i].to(dtype)), logits) +
             biases_[i].to(dtype);
    if (i < factors_.size()) {
      logits = logits + torch::tanh(factors_[i].to(dtype)) * torch::tanh(logits);
    }
  }
  return logits;
}

torch::Tensor FactorizedDensityImpl::likelihood(const torch::Tensor& z_hat) const {
  if (z_hat.dim() != 4 || z_hat.size(1) != channels_) {
    throw ArgumentError("factorized likelihood expects [B, C, H, W] with matching C");
  }
  // [B, C, H, W] -> [C, 1, B*H*W]
  auto values = z_hat.permute({1, 0, 2, 3}).reshape({channels_, 1, -1});
  auto lower = logits_cumulative(values - 0.5);
  auto upper = logits_cumulative(values + 0.5);
  // Flip to the side where the sigmoid difference does not cancel.
  auto sign = -torch::sign(lower + upper).detach();
  auto p = torch::abs(torch::sigmoid(sign * upper) - torch::sigmoid(sign * lower));
  p = torch::clamp_min(p, kLikelihoodFloor);
  return p.reshape({channels_, z_hat.size(0), z_hat.size(2), z_hat.size(3)})
      .permute({1, 0, 2, 3});
}

CdfTableSet FactorizedDensityImpl::build_tables(int precision, double tail,
                                                int search_radius) const {
  torch::NoGradGuard no_grad;
  const int n = 2 * search_radius + 1;
  auto grid = torch::arange(-search_radius, search_radius + 1, torch::kDouble)
                  .view({1, 1, n})
                  .expand({channels_, 1, n})
                  .contiguous();
  // CDF at the upper edge of every integer bin, double precision.
  auto upper = torch::sigmoid(logits_cumulative(grid + 0.5)).view({channels_, n});
  auto lower = torch::sigmoid(logits_cumulative(grid - 0.5)).view({channels_, n});
  auto upper_a = upper.accessor<double, 2>();
  auto lower_a = lower.accessor<double, 2>();

  CdfTableSet set;
  set.precision = precision;
  for (int c = 0; c < channels_; ++c) {
    int lo = 0, hi = n - 1;
    while (lo < n - 1 && upper_a[c][lo] < tail) ++lo;
    while (hi > lo && 1.0 - lower_a[c][hi] < tail) --hi;
    std::vector<double> pmf;
    for (int i = lo; i <= hi; ++i) pmf.push_back(std::max(upper_a[c][i] - lower_a[c][i], 0.0));
    set.tables.push_back(table_from_support_pmf(pmf, lo - search_radius, precision));
  }
  return set;
}

}  // namespace lumen
