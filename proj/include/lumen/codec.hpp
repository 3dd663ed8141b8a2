#pragma once

#include <memory>
#include <vector>

#include <torch/torch.h>

#include "lumen/container.hpp"
#include "lumen/image.hpp"
#include "lumen/model.hpp"
#include "lumen/native.hpp"

namespace lumen {

struct CodecOptions {
  // When set, streams are produced (and the hyper-latent stream decoded) by
  // the native coder; output bytes are identical either way.
  std::shared_ptr<NativeCoderLibrary> native;
};

struct CompressResult {
  BitstreamContainer container;
  torch::Tensor y_hat;  // [1, M, h, w] double
  torch::Tensor z_hat;  // [1, K, h/4, w/4] float, integer valued
  double estimated_bits = 0.0;  // sum of ideal code lengths under the coder tables
  double model_bits = 0.0;      // -log2 of the model likelihoods of (y_hat, z_hat)
};

struct DecompressResult {
  ImageTensor image;  // cropped to the original size
  torch::Tensor y_hat;
  torch::Tensor z_hat;
};

// Per-position (mu, sigma) of the latent, computed in double precision from
// the context model and the entropy-parameter network.  Encoder and decoder
// share this evaluator so their tables agree bit for bit.
class SerialEntropyModel {
 public:
  // hyper: [1, 2M, h, w] output of the hyper decoder.
  SerialEntropyModel(JointModel& model, const torch::Tensor& hyper);

  int channels() const { return m_; }
  int height() const { return h_; }
  int width() const { return w_; }

  // y_hat: [M][h][w] buffer holding every raster predecessor of (i, j).
  void params_at(int i, int j, const std::vector<double>& y_hat, double* mu, double* sigma);

 private:
  int m_, h_, w_, kernel_;
  std::vector<double> hyper_;                  // [2M][h][w]
  std::vector<std::pair<int, int>> taps_;      // (dy, dx) of unmasked kernel taps
  std::vector<double> ctx_w_, ctx_b_;          // [tap][2M][M], [2M]
  std::vector<std::vector<double>> mlp_w_, mlp_b_;
  std::vector<int> mlp_in_, mlp_out_;
  std::vector<double> buf_a_, buf_b_;
};

// Full encoder: SNR branch (when the model uses it), two-level adapted
// analysis, hyper-prior and serial context coding.  Throws StateError when
// the model has no coder tables.
CompressResult compress(const ImageTensor& x, JointModel& model, const CodecOptions& opts = {});

// Codes a given latent y ([1, M, h, w], h and w multiples of 4).
CompressResult compress_latents(const torch::Tensor& y, JointModel& model, uint32_t orig_h,
                                uint32_t orig_w, const CodecOptions& opts = {});

// Throws ConfigError when the container's quality differs from the model's,
// StateError without tables, DecodeError for corrupt payloads.
DecompressResult decompress(const BitstreamContainer& c, JointModel& model,
                            const CodecOptions& opts = {});

}  // namespace lumen
