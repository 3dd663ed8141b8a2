#pragma once

#include <map>
#include <string>
#include <vector>

#include "lumen/codec.hpp"
#include "lumen/image.hpp"
#include "lumen/model.hpp"

namespace lumen {

struct RdPoint {
  std::string image_id;
  int quality = 0;
  double bpp = 0.0;
  double psnr = 0.0;
  double ms_ssim = 0.0;  // NaN when the image is below the MS-SSIM minimum size
  double ms_ssim_db = 0.0;
};

// Per-quality means (NaN MS-SSIM entries are left out of the MS-SSIM means).
std::vector<RdPoint> aggregate_by_quality(const std::vector<RdPoint>& points);

// Scores the decoded reconstruction of `decoded` against `reference`.
RdPoint score(const std::string& image_id, int quality, const ImageTensor& reference,
              const ImageTensor& decoded, double bpp);

// Compresses every low image of the paired corpus at each quality and scores
// the reconstruction against its ground truth.  Throws ArgumentError for an
// empty corpus or no models.
std::vector<RdPoint> evaluate_corpus(const std::string& dir,
                                     std::map<int, JointModel>& models_by_quality,
                                     const CodecOptions& opts = {});

// CSV schema: image_id,quality,bpp,psnr,ms_ssim,ms_ssim_db
void write_rd_csv(const std::string& path, const std::vector<RdPoint>& points);
std::vector<RdPoint> read_rd_csv(const std::string& path);

// Static PSNR-vs-bpp and MS-SSIM(dB)-vs-bpp chart of the per-quality means.
void plot_rd(const std::string& path, const std::vector<RdPoint>& aggregate);

enum class PipelineMode { kCbE, kEbC };
PipelineMode parse_pipeline_mode(const std::string& name);

struct PipelineReport {
  ImageTensor output;
  double bpp = 0.0;
  std::vector<std::string> stages;  // execution order, e.g. {"compress", "enhance"}
};

// Runs `enhancer <in.png> <out.png>` as a child process; a non-zero exit or
// signal throws Error with the status.
void run_enhancer(const std::string& enhancer, const std::string& in, const std::string& out);

// Compress-before-enhance or enhance-before-compress with an external
// enhancer.  Intermediate images are exchanged as 16-bit PNG in `workdir`.
PipelineReport sequential_pipeline(const ImageTensor& x, PipelineMode mode, JointModel& codec,
                                   const std::string& enhancer, const std::string& workdir,
                                   const CodecOptions& opts = {});

}  // namespace lumen
