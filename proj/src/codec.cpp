#include "lumen/codec.hpp"

#include <cmath>

#include "lumen/cdf.hpp"
#include "lumen/errors.hpp"
#include "lumen/rans.hpp"

namespace lumen {
namespace {

// Largest latent symbol magnitude; values beyond saturate.
constexpr double kMaxSymbol = double(1 << 24);
constexpr int64_t kMaxPixels = int64_t{1} << 28;

std::vector<double> to_doubles(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kDouble).contiguous();
  return std::vector<double>(c.data_ptr<double>(), c.data_ptr<double>() + c.numel());
}

double softplus(double x) { return x > 20.0 ? x : std::log1p(std::exp(x)); }

double leaky(double x) { return x < 0.0 ? x * nn::kLeakySlope : x; }

// h_s runs single-threaded so encoder and decoder get identical floats.
torch::Tensor hyper_decode_exact(JointModel& model, const torch::Tensor& z_hat) {
  const int threads = torch::get_num_threads();
  torch::set_num_threads(1);
  torch::Tensor out;
  try {
    out = model->hyper_decode(z_hat);
  } catch (...) {
    torch::set_num_threads(threads);
    throw;
  }
  torch::set_num_threads(threads);
  return out;
}

void require_tables(JointModel& model) {
  if (!model->tables_ready()) {
    throw StateError("model has no coder tables; train or load a checkpoint first");
  }
}

double discrete_gaussian_mass(double q, double sigma) {
  const double a = std::abs(q);
  const double upper = 0.5 * std::erfc(-(0.5 - a) / (sigma * std::sqrt(2.0)));
  const double lower = 0.5 * std::erfc(-(-0.5 - a) / (sigma * std::sqrt(2.0)));
  return std::max(upper - lower, kLikelihoodFloor);
}

std::vector<uint8_t> encode_symbols(const std::vector<int32_t>& symbols,
                                    const std::vector<int32_t>& ids, const CdfTableSet& tables,
                                    const CodecOptions& opts) {
  if (opts.native) {
    return NativeCoderLibrary::make_handle(opts.native, tables).encode(symbols, ids);
  }
  return rans_encode(symbols, ids, tables);
}

}  // namespace

SerialEntropyModel::SerialEntropyModel(JointModel& model, const torch::Tensor& hyper)
    : m_(model->config().m),
      h_(static_cast<int>(hyper.size(2))),
      w_(static_cast<int>(hyper.size(3))),
      kernel_(model->context()->kernel_size()) {
  hyper_ = to_doubles(hyper);
  const auto mask = model->context()->mask().to(torch::kDouble).contiguous();
  const auto weight = to_doubles(model->context()->conv()->weight);  // [2M][M][k][k]
  ctx_b_ = to_doubles(model->context()->conv()->bias);
  const int out_c = 2 * m_, kk = kernel_ * kernel_;
  const double* mk = mask.data_ptr<double>();
  for (int t = 0; t < kk; ++t) {
    if (mk[t] == 0.0) continue;
    taps_.emplace_back(t / kernel_ - kernel_ / 2, t % kernel_ - kernel_ / 2);
    for (int o = 0; o < out_c; ++o) {
      for (int c = 0; c < m_; ++c) {
        ctx_w_.push_back(weight[(static_cast<size_t>(o) * m_ + c) * kk + t]);
      }
    }
  }
  for (auto& conv : model->entropy_params()->layers()) {
    mlp_in_.push_back(static_cast<int>(conv->weight.size(1)));
    mlp_out_.push_back(static_cast<int>(conv->weight.size(0)));
    mlp_w_.push_back(to_doubles(conv->weight));
    mlp_b_.push_back(to_doubles(conv->bias));
  }
}

void SerialEntropyModel::params_at(int i, int j, const std::vector<double>& y_hat, double* mu,
                                   double* sigma) {
  const int out_c = 2 * m_;
  const size_t plane = static_cast<size_t>(h_) * w_;
  buf_a_.assign(4 * m_, 0.0);
  for (int c = 0; c < out_c; ++c) buf_a_[c] = hyper_[c * plane + static_cast<size_t>(i) * w_ + j];
  double* ctx = buf_a_.data() + out_c;
  for (int o = 0; o < out_c; ++o) ctx[o] = ctx_b_[o];
  for (size_t t = 0; t < taps_.size(); ++t) {
    const int y = i + taps_[t].first, x = j + taps_[t].second;
    if (y < 0 || y >= h_ || x < 0 || x >= w_) continue;
    const double* wt = ctx_w_.data() + t * out_c * m_;
    const size_t pos = static_cast<size_t>(y) * w_ + x;
    for (int o = 0; o < out_c; ++o) {
      double acc = 0.0;
      for (int c = 0; c < m_; ++c) acc += wt[o * m_ + c] * y_hat[c * plane + pos];
      ctx[o] += acc;
    }
  }
  std::vector<double>* in = &buf_a_;
  std::vector<double>* out = &buf_b_;
  for (size_t l = 0; l < mlp_w_.size(); ++l) {
    out->assign(mlp_out_[l], 0.0);
    const auto& w = mlp_w_[l];
    for (int o = 0; o < mlp_out_[l]; ++o) {
      double acc = mlp_b_[l][o];
      for (int c = 0; c < mlp_in_[l]; ++c) acc += w[static_cast<size_t>(o) * mlp_in_[l] + c] * (*in)[c];
      (*out)[o] = l + 1 < mlp_w_.size() ? leaky(acc) : acc;
    }
    std::swap(in, out);
  }
  for (int c = 0; c < m_; ++c) {
    mu[c] = (*in)[c];
    sigma[c] = std::max(softplus((*in)[m_ + c]), kSigmaMin);
    if (!std::isfinite(mu[c]) || !std::isfinite(sigma[c])) {
      throw DecodeError("non-finite entropy parameters");
    }
  }
}

CompressResult compress_latents(const torch::Tensor& y, JointModel& model, uint32_t orig_h,
                                uint32_t orig_w, const CodecOptions& opts) {
  require_tables(model);
  const auto& cfg = model->config();
  if (y.dim() != 4 || y.size(0) != 1 || y.size(1) != cfg.m || y.size(2) % 4 != 0 ||
      y.size(3) % 4 != 0) {
    throw ArgumentError("compress_latents expects [1, M, h, w] with h, w multiples of 4");
  }
  torch::NoGradGuard no_grad;
  CompressResult res;
  auto yf = y.to(torch::kFloat);
  res.z_hat = torch::round(model->hyper_encode(yf));

  // Hyper-latent: one table per channel, channel-major raster order.
  const auto& z_tables = model->z_tables();
  const int k = cfg.k;
  const int64_t zh = res.z_hat.size(2), zw = res.z_hat.size(3);
  auto z_cpu = res.z_hat.contiguous();
  std::vector<int32_t> z_sym(z_cpu.numel()), z_ids(z_cpu.numel());
  const float* zp = z_cpu.data_ptr<float>();
  for (int64_t idx = 0; idx < z_cpu.numel(); ++idx) {
    const double v = std::clamp(static_cast<double>(zp[idx]), -kMaxSymbol, kMaxSymbol);
    z_sym[idx] = static_cast<int32_t>(v);
    z_ids[idx] = static_cast<int32_t>(idx / (zh * zw));
    res.estimated_bits += rans_symbol_cost(z_sym[idx], z_tables[z_ids[idx]], z_tables.precision);
  }
  res.z_hat = torch::from_blob(z_sym.data(), {1, k, zh, zw}, torch::kInt).to(torch::kFloat);
  res.model_bits += rate_bits(model->factorized()->likelihood(res.z_hat.to(torch::kDouble))).item<double>();
  res.container.z_stream = encode_symbols(z_sym, z_ids, z_tables, opts);

  // Latent: raster order over positions, channels inner.
  SerialEntropyModel em(model, hyper_decode_exact(model, res.z_hat));
  const int m = cfg.m, h = em.height(), w = em.width();
  if (h != y.size(2) || w != y.size(3)) throw ArgumentError("hyper decoder output does not match y");
  const auto yv = to_doubles(y);
  const size_t plane = static_cast<size_t>(h) * w;
  std::vector<double> y_hat(yv.size(), 0.0), mu(m), sigma(m);
  std::vector<int32_t> y_sym, y_ids;
  y_sym.reserve(yv.size());
  y_ids.reserve(yv.size());
  const auto& g_tables = model->gaussian_tables();
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      em.params_at(i, j, y_hat, mu.data(), sigma.data());
      for (int c = 0; c < m; ++c) {
        const size_t idx = c * plane + static_cast<size_t>(i) * w + j;
        if (!std::isfinite(yv[idx])) throw ArgumentError("latent contains non-finite values");
        const double q = std::clamp(std::nearbyint(yv[idx] - mu[c]), -kMaxSymbol, kMaxSymbol);
        y_hat[idx] = q + mu[c];
        const int table = scale_bin(sigma[c]);
        y_sym.push_back(static_cast<int32_t>(q));
        y_ids.push_back(table);
        res.estimated_bits += rans_symbol_cost(y_sym.back(), g_tables[table], g_tables.precision);
        res.model_bits -= std::log2(discrete_gaussian_mass(q, sigma[c]));
      }
    }
  }
  res.container.y_stream = encode_symbols(y_sym, y_ids, g_tables, opts);
  res.y_hat = torch::from_blob(y_hat.data(), {1, m, h, w}, torch::kDouble).clone();
  res.container.quality_index = static_cast<uint8_t>(cfg.quality_index);
  res.container.orig_height = orig_h;
  res.container.orig_width = orig_w;
  return res;
}

CompressResult compress(const ImageTensor& x, JointModel& model, const CodecOptions& opts) {
  require_tables(model);
  const ImageTensor padded = pad_to_multiple(x);
  torch::NoGradGuard no_grad;
  auto enc = model->analyse(image_to_tensor(padded));
  return compress_latents(enc.y, model, static_cast<uint32_t>(padded.orig_height),
                          static_cast<uint32_t>(padded.orig_width), opts);
}

DecompressResult decompress(const BitstreamContainer& c, JointModel& model,
                            const CodecOptions& opts) {
  const auto& cfg = model->config();
  if (c.quality_index != cfg.quality_index) {
    throw ConfigError("container quality " + std::to_string(c.quality_index) +
                      " does not match model quality " + std::to_string(cfg.quality_index));
  }
  require_tables(model);
  const int64_t ph = (int64_t{c.orig_height} + kDownsampleFactor - 1) / kDownsampleFactor * kDownsampleFactor;
  const int64_t pw = (int64_t{c.orig_width} + kDownsampleFactor - 1) / kDownsampleFactor * kDownsampleFactor;
  if (c.orig_height == 0 || c.orig_width == 0 || ph * pw > kMaxPixels) {
    throw FormatError("container image dimensions out of range");
  }
  torch::NoGradGuard no_grad;
  DecompressResult res;
  const int k = cfg.k, m = cfg.m;
  const int64_t zh = ph / 64, zw = pw / 64;
  const int64_t nz = k * zh * zw;
  std::vector<int32_t> z_ids(nz);
  for (int64_t idx = 0; idx < nz; ++idx) z_ids[idx] = static_cast<int32_t>(idx / (zh * zw));
  std::vector<int32_t> z_sym;
  if (opts.native) {
    z_sym = NativeCoderLibrary::make_handle(opts.native, model->z_tables())
                .decode(c.z_stream, z_ids, static_cast<size_t>(nz));
  } else {
    z_sym = rans_decode(c.z_stream, z_ids, model->z_tables(), static_cast<size_t>(nz));
  }
  res.z_hat = torch::from_blob(z_sym.data(), {1, k, zh, zw}, torch::kInt).to(torch::kFloat);

  SerialEntropyModel em(model, hyper_decode_exact(model, res.z_hat));
  const int h = em.height(), w = em.width();
  const size_t plane = static_cast<size_t>(h) * w;
  std::vector<double> y_hat(plane * m, 0.0), mu(m), sigma(m);
  RansDecoder dec(c.y_stream, model->gaussian_tables());
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      em.params_at(i, j, y_hat, mu.data(), sigma.data());
      for (int ch = 0; ch < m; ++ch) {
        const int32_t q = dec.get(scale_bin(sigma[ch]));
        y_hat[ch * plane + static_cast<size_t>(i) * w + j] = static_cast<double>(q) + mu[ch];
      }
    }
  }
  dec.finish();
  res.y_hat = torch::from_blob(y_hat.data(), {1, m, h, w}, torch::kDouble).clone();
  auto x = model->main_decode(res.y_hat.to(torch::kFloat));
  res.image = crop(tensor_to_image(x, static_cast<int>(ph), static_cast<int>(pw)), 0, 0,
                   static_cast<int>(c.orig_height), static_cast<int>(c.orig_width));
  return res;
}

}  // namespace lumen
