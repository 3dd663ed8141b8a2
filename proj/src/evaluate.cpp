#include "lumen/evaluate.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "lumen/dataset.hpp"
#include "lumen/errors.hpp"
#include "lumen/metrics.hpp"

extern char** environ;

namespace fs = std::filesystem;

namespace lumen {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void draw_chart(cv::Mat& canvas, cv::Rect area, const std::vector<RdPoint>& pts,
                double RdPoint::*metric, const std::string& ylabel) {
  const cv::Scalar black(0, 0, 0), blue(200, 80, 0);
  cv::rectangle(canvas, area, black, 1);
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : pts) {
    if (std::isfinite(p.bpp) && std::isfinite(p.*metric)) xy.emplace_back(p.bpp, p.*metric);
  }
  cv::putText(canvas, ylabel, {area.x, area.y - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.5, black, 1);
  cv::putText(canvas, "bpp", {area.x + area.width - 30, area.y + area.height + 32},
              cv::FONT_HERSHEY_SIMPLEX, 0.5, black, 1);
  if (xy.empty()) return;
  std::sort(xy.begin(), xy.end());
  double x0 = xy.front().first, x1 = xy.back().first, y0 = xy[0].second, y1 = y0;
  for (auto& [x, y] : xy) {
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (x1 - x0 < 1e-9) { x0 -= 0.05; x1 += 0.05; }
  if (y1 - y0 < 1e-9) { y0 -= 0.5; y1 += 0.5; }
  auto to_px = [&](double x, double y) {
    return cv::Point(area.x + static_cast<int>((x - x0) / (x1 - x0) * (area.width - 20)) + 10,
                     area.y + area.height - 10 -
                         static_cast<int>((y - y0) / (y1 - y0) * (area.height - 20)));
  };
  std::ostringstream lo, hi, bl, bh;
  lo << std::fixed << std::setprecision(2) << y0;
  hi << std::fixed << std::setprecision(2) << y1;
  bl << std::fixed << std::setprecision(3) << x0;
  bh << std::fixed << std::setprecision(3) << x1;
  cv::putText(canvas, lo.str(), {area.x - 55, area.y + area.height - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1);
  cv::putText(canvas, hi.str(), {area.x - 55, area.y + 14}, cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1);
  cv::putText(canvas, bl.str(), {area.x, area.y + area.height + 16}, cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1);
  cv::putText(canvas, bh.str(), {area.x + area.width - 45, area.y + area.height + 16}, cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1);
  for (size_t i = 0; i < xy.size(); ++i) {
    const auto p = to_px(xy[i].first, xy[i].second);
    cv::circle(canvas, p, 4, blue, cv::FILLED);
    if (i > 0) cv::line(canvas, to_px(xy[i - 1].first, xy[i - 1].second), p, blue, 2);
  }
}

}  // namespace

std::vector<RdPoint> aggregate_by_quality(const std::vector<RdPoint>& points) {
  std::map<int, std::vector<const RdPoint*>> groups;
  for (const auto& p : points) groups[p.quality].push_back(&p);
  std::vector<RdPoint> out;
  for (const auto& [q, group] : groups) {
    RdPoint a;
    a.image_id = "mean";
    a.quality = q;
    int ssim_count = 0;
    double ssim = 0.0, ssim_db = 0.0;
    for (const auto* p : group) {
      a.bpp += p->bpp;
      a.psnr += p->psnr;
      if (std::isfinite(p->ms_ssim)) {
        ssim += p->ms_ssim;
        ssim_db += p->ms_ssim_db;
        ++ssim_count;
      }
    }
    a.bpp /= group.size();
    a.psnr /= group.size();
    a.ms_ssim = ssim_count ? ssim / ssim_count : kNaN;
    a.ms_ssim_db = ssim_count ? ssim_db / ssim_count : kNaN;
    out.push_back(a);
  }
  return out;
}

RdPoint score(const std::string& image_id, int quality, const ImageTensor& reference,
              const ImageTensor& decoded, double bpp) {
  RdPoint p;
  p.image_id = image_id;
  p.quality = quality;
  p.bpp = bpp;
  p.psnr = psnr(reference, decoded);
  if (std::min(reference.orig_height, reference.orig_width) >= kMsSsimMinSide) {
    p.ms_ssim = ms_ssim(reference, decoded);
    p.ms_ssim_db = ms_ssim_db(p.ms_ssim);
  } else {
    p.ms_ssim = p.ms_ssim_db = kNaN;
  }
  return p;
}

std::vector<RdPoint> evaluate_corpus(const std::string& dir,
                                     std::map<int, JointModel>& models_by_quality,
                                     const CodecOptions& opts) {
  if (models_by_quality.empty()) throw ArgumentError("no models to evaluate");
  PairedDataset ds = [&] {
    try {
      return PairedDataset::open(dir, false, false);
    } catch (const IngestionError& e) {
      throw ArgumentError(std::string("empty or invalid corpus: ") + e.what());
    }
  }();
  std::vector<RdPoint> points;
  for (size_t i = 0; i < ds.size(); ++i) {
    const PairedSample s = ds.load(i);
    for (auto& [q, model] : models_by_quality) {
      const auto enc = compress(s.low, model, opts);
      const auto dec = decompress(enc.container, model, opts);
      points.push_back(score(s.name, q, s.gt, dec.image, bits_per_pixel(enc.container)));
    }
  }
  return points;
}

void write_rd_csv(const std::string& path, const std::vector<RdPoint>& points) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "image_id,quality,bpp,psnr,ms_ssim,ms_ssim_db\n";
  out << std::setprecision(17);
  for (const auto& p : points) {
    if (p.image_id.find_first_of(",\"\n") != std::string::npos) {
      throw ArgumentError("image id cannot contain commas, quotes or newlines: " + p.image_id);
    }
    out << p.image_id << ',' << p.quality << ',' << p.bpp << ',' << p.psnr << ',' << p.ms_ssim
        << ',' << p.ms_ssim_db << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

std::vector<RdPoint> read_rd_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "image_id,quality,bpp,psnr,ms_ssim,ms_ssim_db") {
    throw FormatError(path + ": unexpected CSV header");
  }
  std::vector<RdPoint> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw FormatError(path + ": bad row: " + line);
    RdPoint p;
    try {
      p.image_id = f[0];
      p.quality = std::stoi(f[1]);
      p.bpp = std::strtod(f[2].c_str(), nullptr);
      p.psnr = std::strtod(f[3].c_str(), nullptr);
      p.ms_ssim = std::strtod(f[4].c_str(), nullptr);
      p.ms_ssim_db = std::strtod(f[5].c_str(), nullptr);
    } catch (const std::exception&) {
      throw FormatError(path + ": bad row: " + line);
    }
    points.push_back(p);
  }
  return points;
}

void plot_rd(const std::string& path, const std::vector<RdPoint>& aggregate) {
  cv::Mat canvas(420, 900, CV_8UC3, cv::Scalar(255, 255, 255));
  draw_chart(canvas, {70, 40, 360, 320}, aggregate, &RdPoint::psnr, "PSNR (dB)");
  draw_chart(canvas, {520, 40, 360, 320}, aggregate, &RdPoint::ms_ssim_db, "MS-SSIM (dB)");
  if (!cv::imwrite(path, canvas)) throw IoError("cannot write plot " + path);
}

PipelineMode parse_pipeline_mode(const std::string& name) {
  if (name == "cbe" || name == "CbE") return PipelineMode::kCbE;
  if (name == "ebc" || name == "EbC") return PipelineMode::kEbC;
  throw ArgumentError("pipeline mode must be cbe or ebc");
}

void run_enhancer(const std::string& enhancer, const std::string& in, const std::string& out) {
  std::vector<std::string> args = {enhancer, in, out};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, enhancer.c_str(), nullptr, nullptr, argv.data(), environ);
  if (rc != 0) throw Error("cannot start enhancer " + enhancer + ": " + std::strerror(rc));
  int status = 0;
  if (waitpid(pid, &status, 0) < 0) throw Error("waitpid failed for enhancer " + enhancer);
  if (WIFSIGNALED(status)) {
    throw Error("enhancer " + enhancer + " killed by signal " + std::to_string(WTERMSIG(status)));
  }
  if (WEXITSTATUS(status) != 0) {
    throw Error("enhancer " + enhancer + " exited with status " +
                std::to_string(WEXITSTATUS(status)));
  }
  if (!fs::exists(out)) throw Error("enhancer " + enhancer + " produced no output");
}

PipelineReport sequential_pipeline(const ImageTensor& x, PipelineMode mode, JointModel& codec,
                                   const std::string& enhancer, const std::string& workdir,
                                   const CodecOptions& opts) {
  fs::create_directories(workdir);
  const std::string in_path = (fs::path(workdir) / "enhance_in.png").string();
  const std::string out_path = (fs::path(workdir) / "enhance_out.png").string();
  auto enhance = [&](const ImageTensor& img) {
    save_image(in_path, img, 16);
    run_enhancer(enhancer, in_path, out_path);
    return crop_to_original(load_image(out_path));
  };
  auto code = [&](const ImageTensor& img, double& bpp) {
    const auto enc = compress(img, codec, opts);
    bpp = bits_per_pixel(enc.container);
    return decompress(enc.container, codec, opts).image;
  };
  PipelineReport r;
  if (mode == PipelineMode::kCbE) {
    r.stages = {"compress", "enhance"};
    r.output = enhance(code(x, r.bpp));
  } else {
    r.stages = {"enhance", "compress"};
    r.output = code(enhance(x), r.bpp);
  }
  return r;
}

}  // namespace lumen
