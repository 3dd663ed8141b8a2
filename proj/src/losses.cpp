#include "lumen/losses.hpp"

#include "lumen/errors.hpp"

namespace lumen {
namespace {

void check_same(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) throw ArgumentError(std::string(what) + ": shape mismatch");
}

int64_t image_pixels(const torch::Tensor& x) {
  if (x.dim() != 4) throw ArgumentError("expected an image batch [B, 3, H, W]");
  return x.size(0) * x.size(2) * x.size(3);
}

LossComponents rd_loss(const torch::Tensor& target, const torch::Tensor& rec,
                       const torch::Tensor& p_y, const torch::Tensor& p_z, double lambda_d,
                       int p) {
  check_same(target, rec, "rate-distortion loss");
  const int64_t pixels = image_pixels(target);
  LossComponents out;
  out.distortion = distortion(target, rec, p);
  out.rate_y = rate_bpp(p_y, pixels);
  out.rate_z = rate_bpp(p_z, pixels);
  out.total = lambda_d * out.distortion + out.rate_y + out.rate_z;
  return out;
}

}  // namespace

torch::Tensor distortion(const torch::Tensor& target, const torch::Tensor& rec, int p) {
  check_same(target, rec, "distortion");
  auto diff = (target - rec) * 255.0;
  if (p == 2) return diff.pow(2).mean();
  if (p == 1) return diff.abs().mean();
  throw ArgumentError("distortion norm must be 1 or 2");
}

torch::Tensor rate_bpp(const torch::Tensor& likelihoods, int64_t pixels) {
  if (pixels <= 0) throw ArgumentError("rate_bpp: pixel count must be positive");
  return -torch::log2(likelihoods).sum() / static_cast<double>(pixels);
}

LossComponents rd_pretrain_loss(const torch::Tensor& x, const torch::Tensor& x_rec,
                                const torch::Tensor& p_y, const torch::Tensor& p_z,
                                double lambda_d) {
  return rd_loss(x, x_rec, p_y, p_z, lambda_d, 2);
}

LossComponents joint_loss(const torch::Tensor& x_gt, const torch::Tensor& x_hat,
                          const torch::Tensor& p_y, const torch::Tensor& p_z, double lambda_d) {
  return rd_loss(x_gt, x_hat, p_y, p_z, lambda_d, 1);
}

torch::Tensor guidance_loss(const torch::Tensor& y0_gt, const torch::Tensor& y0,
                            const torch::Tensor& y_gt, const torch::Tensor& y) {
  check_same(y0_gt, y0, "guidance loss (level 0)");
  check_same(y_gt, y, "guidance loss (level 1)");
  return (y0_gt.detach() - y0).abs().mean() + (y_gt.detach() - y).abs().mean();
}

void check_finite(const LossComponents& loss) {
  const std::pair<const char*, const torch::Tensor*> parts[] = {
      {"distortion", &loss.distortion},
      {"rate_y", &loss.rate_y},
      {"rate_z", &loss.rate_z},
      {"guidance", &loss.guidance},
      {"total", &loss.total}};
  for (const auto& [name, t] : parts) {
    if (t->defined() && !torch::isfinite(*t).all().item<bool>()) {
      throw TrainingError(std::string("non-finite loss component: ") + name);
    }
  }
}

}  // namespace lumen
