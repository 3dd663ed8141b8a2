#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "lumen/errors.hpp"
#include "lumen/evaluate.hpp"
#include "lumen/metrics.hpp"

using namespace lumen;
namespace fs = std::filesystem;

namespace {

JointModel codec_model() {
  torch::manual_seed(31);
  ModelConfig cfg;
  cfg.n = cfg.m = cfg.k = 16;
  cfg.attention_heads = 4;
  cfg.quality_index = 6;
  JointModel model(cfg);
  model->update_tables();
  return model;
}

ImageTensor smooth_image(int h, int w, double level) {
  ImageTensor img(h, w);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) img.at(c, y, x) = level * (0.5 + 0.5 * std::sin(0.1 * x + 0.2 * y + c));
    }
  }
  return img;
}

RdPoint point(const std::string& id, int q, double bpp, double psnr, double ssim) {
  return {id, q, bpp, psnr, ssim, ms_ssim_db(ssim)};
}

}  // namespace

TEST_CASE("aggregation") {
  auto single = aggregate_by_quality({point("a", 3, 0.5, 30.0, 0.95)});
  REQUIRE(single.size() == 1);
  CHECK(single[0].bpp == 0.5);
  CHECK(single[0].psnr == 30.0);
  CHECK(single[0].ms_ssim == 0.95);

  std::vector<RdPoint> pts = {point("a", 3, 0.5, 30.0, 0.95), point("b", 3, 0.7, 32.0, 0.97),
                              point("a", 5, 1.0, 35.0, 0.99)};
  auto agg = aggregate_by_quality(pts);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].bpp == doctest::Approx(0.6));
  pts.push_back(pts[0]);
  pts.push_back(pts[1]);
  auto dup = aggregate_by_quality(pts);
  CHECK(dup[0].bpp == doctest::Approx(agg[0].bpp));
  CHECK(dup[0].psnr == doctest::Approx(agg[0].psnr));
  CHECK(dup[1].psnr == agg[1].psnr);
}

TEST_CASE("RD CSV round trip") {
  const std::string path = (fs::temp_directory_path() / "lumen_test_rd.csv").string();
  std::vector<RdPoint> pts = {point("img_1.png", 0, 0.123456789012345, 27.31, 0.9123),
                              point("img_2.png", 7, 1.5, 100.0, 0.5)};
  pts.push_back({"tiny.png", 2, 0.4, 25.0, std::nan(""), std::nan("")});
  write_rd_csv(path, pts);
  auto back = read_rd_csv(path);
  REQUIRE(back.size() == pts.size());
  for (size_t i = 0; i < 2; ++i) {
    CHECK(back[i].image_id == pts[i].image_id);
    CHECK(back[i].quality == pts[i].quality);
    CHECK(back[i].bpp == pts[i].bpp);
    CHECK(back[i].psnr == pts[i].psnr);
    CHECK(back[i].ms_ssim == pts[i].ms_ssim);
    CHECK(back[i].ms_ssim_db == pts[i].ms_ssim_db);
  }
  CHECK(std::isnan(back[2].ms_ssim));
  CHECK_THROWS_AS(write_rd_csv(path, {point("a,b", 0, 1, 1, 0.5)}), ArgumentError);
  fs::remove(path);
}

TEST_CASE("corpus evaluation") {
  const fs::path root = fs::temp_directory_path() / "lumen_test_corpus";
  fs::remove_all(root);
  fs::create_directories(root / "low");
  fs::create_directories(root / "gt");
  std::map<int, JointModel> models = {{6, codec_model()}};
  CHECK_THROWS_AS(evaluate_corpus(root.string(), models), ArgumentError);

  save_image((root / "low" / "a.png").string(), smooth_image(64, 96, 0.1), 16);
  save_image((root / "gt" / "a.png").string(), smooth_image(64, 96, 0.9), 16);
  auto pts = evaluate_corpus(root.string(), models);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].image_id == "a.png");
  CHECK(pts[0].quality == 6);
  CHECK(pts[0].bpp > 0.0);
  CHECK(std::isfinite(pts[0].psnr));
  CHECK(std::isnan(pts[0].ms_ssim));  // below the MS-SSIM minimum size

  const std::string plot = (root / "rd.png").string();
  plot_rd(plot, aggregate_by_quality(pts));
  CHECK(fs::file_size(plot) > 0);
  std::map<int, JointModel> none;
  CHECK_THROWS_AS(evaluate_corpus(root.string(), none), ArgumentError);
  fs::remove_all(root);
}

TEST_CASE("sequential pipelines") {
  JointModel model = codec_model();
  const ImageTensor x = smooth_image(64, 80, 0.3);
  const std::string work = (fs::temp_directory_path() / "lumen_test_pipeline").string();

  const auto direct = decompress(compress(x, model).container, model).image;
  auto cbe = sequential_pipeline(x, PipelineMode::kCbE, model, "/bin/cp", work);
  CHECK(cbe.stages == std::vector<std::string>{"compress", "enhance"});
  // Identity enhancer: codec output up to the 16-bit exchange format.
  double worst = 0.0;
  for (size_t i = 0; i < direct.data.size(); ++i) {
    worst = std::max(worst, std::abs(direct.data[i] - cbe.output.data[i]));
  }
  CHECK(worst <= 0.5 / 65535.0 + 1e-12);

  auto ebc = sequential_pipeline(x, PipelineMode::kEbC, model, "/bin/cp", work);
  CHECK(ebc.stages == std::vector<std::string>{"enhance", "compress"});
  CHECK(ebc.bpp > 0.0);
  CHECK(std::abs(psnr(x, ebc.output) - psnr(x, cbe.output)) < 1.0);

  try {
    sequential_pipeline(x, PipelineMode::kEbC, model, "/bin/false", work);
    FAIL("expected enhancer failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("status 1") != std::string::npos);
  }
  CHECK_THROWS_AS(sequential_pipeline(x, PipelineMode::kCbE, model, "/nonexistent/enhancer", work),
                  Error);
  CHECK(parse_pipeline_mode("cbe") == PipelineMode::kCbE);
  CHECK_THROWS_AS(parse_pipeline_mode("both"), ArgumentError);
  fs::remove_all(work);
}
