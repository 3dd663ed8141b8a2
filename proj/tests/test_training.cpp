#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <opencv2/imgcodecs.hpp>

#include "lumen/dataset.hpp"
#include "lumen/errors.hpp"
#include "lumen/losses.hpp"
#include "lumen/train.hpp"

using namespace lumen;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.n = cfg.m = cfg.k = 8;
  cfg.attention_heads = 2;
  return cfg;
}

TrainConfig tiny_train(double lambda_d = 0.0016) {
  TrainConfig cfg;
  cfg.lambda_d = lambda_d;
  cfg.batch = 1;
  cfg.patch = 64;
  cfg.seed = 3;
  return cfg;
}

std::vector<torch::Tensor> snapshot(JointModel& m) {
  std::vector<torch::Tensor> out;
  for (auto& p : m->parameters()) out.push_back(p.detach().clone());
  return out;
}

bool same_params(JointModel& m, const std::vector<torch::Tensor>& snap) {
  auto params = m->parameters();
  for (size_t i = 0; i < params.size(); ++i) {
    if (!torch::equal(params[i], snap[i])) return false;
  }
  return true;
}

void write_png(const fs::path& p, int h, int w, int value) {
  cv::Mat m(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.at<cv::Vec3b>(y, x) = cv::Vec3b((x + value) % 256, y % 256, value);
  }
  REQUIRE(cv::imwrite(p.string(), m));
}

}  // namespace

TEST_CASE("distortion and rate") {
  auto x = torch::rand({2, 3, 8, 8}, torch::kDouble);
  CHECK(distortion(x, x, 2).item<double>() == 0.0);
  CHECK(distortion(x, x + 1.0 / 255.0, 1).item<double>() == doctest::Approx(1.0));
  CHECK(distortion(x, x + 2.0 / 255.0, 2).item<double>() == doctest::Approx(4.0));
  CHECK_THROWS_AS(distortion(x, x, 3), ArgumentError);
  CHECK_THROWS_AS(distortion(x, x.narrow(2, 0, 4), 1), ArgumentError);
  // Uniform over 2^b symbols costs b bits per element.
  auto p = torch::full({1, 4, 2, 2}, 1.0 / 8.0, torch::kDouble);
  CHECK(rate_bpp(p, 16).item<double>() == doctest::Approx(3.0));
}

TEST_CASE("stage losses") {
  auto x = torch::rand({1, 3, 16, 16}, torch::kDouble);
  auto rec = torch::rand({1, 3, 16, 16}, torch::kDouble);
  auto p_y = torch::full({1, 8, 4, 4}, 0.25, torch::kDouble);
  auto p_z = torch::full({1, 8, 1, 1}, 0.5, torch::kDouble);

  auto perfect = rd_pretrain_loss(x, x, p_y, p_z, 0.0016);
  CHECK(perfect.distortion.item<double>() == 0.0);
  // 128 elements x 2 bits and 8 x 1 bit over 256 pixels.
  CHECK(std::abs(perfect.total.item<double>() - (1.0 + 8.0 / 256.0)) < 1e-12);

  auto l1 = joint_loss(x, rec, p_y, p_z, 0.012);
  auto l2 = joint_loss(x, rec, p_y, p_z, 0.024);
  CHECK(std::abs(l1.total.item<double>() -
                 (0.012 * l1.distortion + l1.rate_y + l1.rate_z).item<double>()) < 1e-12);
  CHECK(torch::equal(l1.distortion, l2.distortion));
  CHECK(torch::equal(l1.rate_y, l2.rate_y));
  CHECK(std::abs((l2.total - l2.rate_y - l2.rate_z).item<double>() -
                 2.0 * (l1.total - l1.rate_y - l1.rate_z).item<double>()) < 1e-12);
  auto pure = joint_loss(x, rec, p_y, p_z, 0.0);
  CHECK(pure.total.item<double>() == (pure.rate_y + pure.rate_z).item<double>());
  CHECK(joint_loss(x, x, p_y, p_z, 0.012).distortion.item<double>() == 0.0);
}

TEST_CASE("guidance loss") {
  auto y0 = torch::randn({1, 8, 8, 8}, torch::kDouble);
  auto y = torch::randn({1, 8, 2, 2}, torch::kDouble);
  CHECK(guidance_loss(y0, y0, y, y).item<double>() == 0.0);
  CHECK(guidance_loss(y0 + 0.75, y0, y, y).item<double>() == doctest::Approx(0.75));
  CHECK(guidance_loss(y0, y0, y - 2.0, y).item<double>() == doctest::Approx(2.0));
  CHECK_THROWS_AS(guidance_loss(y0, y, y, y), ArgumentError);

  auto teacher = torch::randn({1, 8, 8, 8}, torch::requires_grad());
  auto student = torch::randn({1, 8, 8, 8}, torch::requires_grad());
  auto t1 = torch::randn({1, 8, 2, 2}, torch::requires_grad());
  auto s1 = torch::randn({1, 8, 2, 2}, torch::requires_grad());
  guidance_loss(teacher, student, t1, s1).backward();
  CHECK(student.grad().defined());
  CHECK(s1.grad().defined());
  CHECK_FALSE(teacher.grad().defined());
  CHECK_FALSE(t1.grad().defined());
}

TEST_CASE("non-finite components are named") {
  LossComponents l;
  l.distortion = torch::tensor(1.0);
  l.rate_y = torch::tensor(std::nan(""));
  l.rate_z = torch::tensor(0.0);
  l.total = torch::tensor(1.0);
  try {
    check_finite(l);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("rate_y") != std::string::npos);
  }
}

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  CHECK(lr_at(0, cfg) == 1e-4);
  CHECK(lr_at(499999, cfg) == 1e-4);
  CHECK(lr_at(500000, cfg) == 5e-5);
  CHECK(lr_at(600000, cfg) == 2.5e-5);
  CHECK(lr_at(700000, cfg) == 1.25e-5);
  CHECK(lr_at(850001, cfg) == 6.25e-6);
  CHECK_THROWS_AS(lr_at(-1, cfg), ArgumentError);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lambda_d = 0.005;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.lr_decay_steps = {10, 10};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.patch = 100;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  CHECK(cfg.guidance_weight() == doctest::Approx(0.00016));
  cfg.lambda_g = 0.0;
  CHECK(cfg.guidance_weight() == 0.0);
}

TEST_CASE("joint training needs pretrained weights") {
  JointModel model(tiny_config());
  CHECK_THROWS_AS(Trainer(model, tiny_train(), TrainStage::kJoint), StateError);
  CHECK_THROWS_AS(Trainer(model, tiny_train(), TrainStage::kGuidance), StateError);
  Trainer pre(model, tiny_train(), TrainStage::kPretrain);
  pre.step(torch::rand({1, 3, 64, 64}), torch::rand({1, 3, 64, 64}));
  CHECK(model->stage() == ModelStage::kPretrained);
  Trainer joint(model, tiny_train(0.012), TrainStage::kJoint);
  CHECK(model->stage() == ModelStage::kJoint);
  CHECK(joint.step(torch::rand({1, 3, 64, 64}) * 0.1, torch::rand({1, 3, 64, 64})).lr == 1e-4);
}

TEST_CASE("step skipping and updates") {
  torch::manual_seed(1);
  JointModel model(tiny_config());
  auto low = torch::rand({1, 3, 64, 64});

  TrainConfig capped = tiny_train();
  capped.loss_cap = 1e-9;
  Trainer skipper(model, capped, TrainStage::kPretrain);
  auto before = snapshot(model);
  auto r = skipper.step(low, low);
  CHECK(r.skipped);
  CHECK(same_params(model, before));
  CHECK(skipper.iteration() == 1);

  Trainer trainer(model, tiny_train(), TrainStage::kPretrain);
  r = trainer.step(low, low);
  CHECK_FALSE(r.skipped);
  CHECK_FALSE(same_params(model, before));
  CHECK(std::abs(r.loss - (0.0016 * r.distortion + r.rate_y + r.rate_z)) < 1e-6 * std::abs(r.loss));
}

TEST_CASE("default cap follows the loss average") {
  torch::manual_seed(2);
  JointModel model(tiny_config());
  TrainConfig cfg = tiny_train();
  cfg.cap_warmup = 3;
  Trainer trainer(model, cfg, TrainStage::kPretrain);
  auto x = torch::rand({1, 3, 64, 64});
  for (int i = 0; i < 3; ++i) CHECK(trainer.step(x, x).cap == 0.0);
  auto r = trainer.step(x, x);
  CHECK(r.cap > 0.0);
  // A batch far outside the recent loss range is skipped.
  auto before = snapshot(model);
  auto wild = torch::rand({1, 3, 64, 64}) * 400.0;
  r = trainer.step(wild, wild);
  CHECK(r.skipped);
  CHECK(same_params(model, before));
}

TEST_CASE("fixed seed reproduces the loss trace") {
  auto trace = [](TrainStage stage, std::optional<double> lambda_g) {
    torch::manual_seed(21);
    JointModel model(tiny_config());
    model->set_stage(ModelStage::kPretrained);
    TrainConfig cfg = tiny_train(0.012);
    cfg.lambda_g = lambda_g;
    Trainer trainer(model, cfg, stage);
    auto low = torch::rand({1, 3, 64, 64}) * 0.2;
    auto gt = torch::rand({1, 3, 64, 64});
    std::vector<double> out;
    for (int i = 0; i < 10; ++i) out.push_back(trainer.step(low, gt).loss);
    return out;
  };
  auto a = trace(TrainStage::kJoint, std::nullopt);
  CHECK(a == trace(TrainStage::kJoint, std::nullopt));
  CHECK(a == trace(TrainStage::kGuidance, 0.0));
  CHECK(a != trace(TrainStage::kGuidance, 0.5));
}

TEST_CASE("paired dataset") {
  const fs::path root = fs::temp_directory_path() / "lumen_test_dataset";
  fs::remove_all(root);
  fs::create_directories(root / "low");
  fs::create_directories(root / "gt");
  write_png(root / "low" / "a.png", 100, 150, 10);
  write_png(root / "gt" / "a.png", 100, 150, 200);
  write_png(root / "low" / "b.png", 40, 50, 20);
  write_png(root / "gt" / "b.png", 40, 50, 220);

  PairedDataset ds = PairedDataset::open(root.string());
  CHECK(ds.size() == 2);

  SUBCASE("co-located crops") {
    PairIterator it(ds, 64, 5);
    for (int i = 0; i < 10; ++i) {
      auto s = it.next();
      CHECK(s.low.height == 64);
      CHECK(s.gt.width == 64);
      // Blue holds (x + value) and red holds value, so their difference
      // identifies the crop column.
      const double lx = (s.low.at(2, 0, 0) - s.low.at(0, 0, 0)) * 255.0;
      const double gx = (s.gt.at(2, 0, 0) - s.gt.at(0, 0, 0)) * 255.0;
      CHECK(std::fmod(lx + 512.0, 256.0) == doctest::Approx(std::fmod(gx + 512.0, 256.0)));
      CHECK(s.low.at(1, 5, 3) == s.gt.at(1, 5, 3));
    }
  }

  SUBCASE("seeded iteration") {
    PairIterator a(ds, 64, 9), b(ds, 64, 9);
    for (int i = 0; i < 5; ++i) {
      auto [la, ga] = a.next_batch(2);
      auto [lb, gb] = b.next_batch(2);
      CHECK(torch::equal(la, lb));
      CHECK(torch::equal(ga, gb));
    }
  }

  SUBCASE("small image is padded before cropping") {
    auto s = ds.load(1);
    std::mt19937_64 rng(1);
    auto c = crop_pair(s, 64, rng);
    auto expect = pad_to_at_least(s.low, 64, 64);
    CHECK(c.low.data == expect.data);
  }

  SUBCASE("missing counterpart") {
    write_png(root / "low" / "c.png", 64, 64, 1);
    try {
      PairedDataset::open(root.string());
      FAIL("expected IngestionError");
    } catch (const IngestionError& e) {
      CHECK(std::string(e.what()).find("c.png") != std::string::npos);
    }
  }

  SUBCASE("unpaired mode") {
    PairedDataset flat = PairedDataset::open((root / "low").string(), true);
    auto s = flat.load(0);
    CHECK(s.low.data == s.gt.data);
  }
  fs::remove_all(root);
}
