// lumen: encode, decode, train, evaluate and compare pipelines.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "lumen/checkpoint.hpp"
#include "lumen/codec.hpp"
#include "lumen/dataset.hpp"
#include "lumen/errors.hpp"
#include "lumen/evaluate.hpp"
#include "lumen/metrics.hpp"
#include "lumen/train.hpp"

namespace fs = std::filesystem;
using namespace lumen;

namespace {

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ArgumentError*>(&e)) return 2;
  if (dynamic_cast<const IoError*>(&e)) return 3;
  if (dynamic_cast<const FormatError*>(&e)) return 4;
  if (dynamic_cast<const DecodeError*>(&e)) return 5;
  if (dynamic_cast<const ConfigError*>(&e)) return 6;
  if (dynamic_cast<const StateError*>(&e)) return 7;
  if (dynamic_cast<const IngestionError*>(&e)) return 8;
  if (dynamic_cast<const TrainingError*>(&e)) return 9;
  return 1;
}

CodecOptions codec_options(const std::string& native_path) {
  CodecOptions opts;
  if (!native_path.empty()) {
    opts.native = NativeCoderLibrary::open(native_path);
  } else if (auto lib = NativeCoderLibrary::from_env()) {
    opts.native = *lib;
  }
  return opts;
}

JointModel load_ready(const std::string& path) {
  JointModel model = load_checkpoint(path);
  model->eval();
  if (!model->tables_ready()) model->update_tables();
  return model;
}

// "0..7", "2,5,7" or "3".
std::vector<int> parse_qualities(const std::string& text) {
  std::vector<int> out;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const int lo = std::stoi(text.substr(0, dots)), hi = std::stoi(text.substr(dots + 2));
      for (int q = lo; q <= hi; ++q) out.push_back(q);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    }
  } catch (const std::exception&) {
    throw ArgumentError("bad quality list: " + text);
  }
  for (int q : out) {
    if (q < 0 || q > 7) throw ArgumentError("quality out of range: " + std::to_string(q));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint low-light enhancement and compression codec"};
  app.require_subcommand(1);

  // ---- init ----
  auto* init = app.add_subcommand("init", "Write a randomly initialised checkpoint");
  std::string init_out;
  ModelConfig init_cfg;
  bool init_no_snr = false;
  uint64_t init_seed = 0;
  init->add_option("--ckpt-out", init_out, "Checkpoint path")->required();
  init->add_option("--n", init_cfg.n, "Level-0 channels");
  init->add_option("--m", init_cfg.m, "Bottleneck channels");
  init->add_option("--k", init_cfg.k, "Hyper-latent channels");
  init->add_option("--quality", init_cfg.quality_index, "Quality index 0-7");
  init->add_option("--heads", init_cfg.attention_heads, "Attention heads");
  init->add_option("--seed", init_seed, "RNG seed");
  init->add_flag("--no-snr", init_no_snr, "Disable the SNR branch");

  // ---- encode ----
  auto* encode = app.add_subcommand("encode", "Compress an image");
  std::string enc_in, enc_out, enc_ckpt, native_path;
  int enc_quality = -1;
  encode->add_option("input", enc_in, "Input image")->required();
  encode->add_option("output", enc_out, "Output container")->required();
  encode->add_option("--quality", enc_quality, "Quality index the checkpoint was trained for")->required();
  encode->add_option("--ckpt", enc_ckpt, "Checkpoint")->required();
  encode->add_option("--native", native_path, "Native coder library");

  // ---- decode ----
  auto* decode = app.add_subcommand("decode", "Decompress a container");
  std::string dec_in, dec_out, dec_ckpt;
  int dec_bits = 8;
  decode->add_option("input", dec_in, "Input container")->required();
  decode->add_option("output", dec_out, "Output image")->required();
  decode->add_option("--ckpt", dec_ckpt, "Checkpoint")->required();
  decode->add_option("--bits", dec_bits, "Output bit depth (8 or 16)");
  decode->add_option("--native", native_path, "Native coder library");

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train a model");
  std::string tr_stage = "pretrain", tr_data, tr_out, tr_in, tr_log;
  int tr_quality = 4, tr_threads = 0;
  int64_t tr_iters = 1000;
  bool tr_unpaired = false;
  std::optional<double> tr_lambda_g;
  TrainConfig tcfg;
  ModelConfig tr_model;
  train->add_option("--stage", tr_stage, "pretrain | joint | guidance")
      ->check(CLI::IsMember({"pretrain", "joint", "guidance"}));
  train->add_option("--data", tr_data, "Dataset directory (low/ and gt/)")->required();
  train->add_option("--quality", tr_quality, "Quality index 0-7 (joint stages)");
  train->add_option("--iters", tr_iters, "Iterations to run");
  train->add_option("--seed", tcfg.seed, "RNG seed");
  train->add_option("--ckpt-out", tr_out, "Output checkpoint")->required();
  train->add_option("--ckpt-in", tr_in, "Starting checkpoint (required for joint stages)");
  train->add_option("--batch", tcfg.batch, "Batch size");
  train->add_option("--patch", tcfg.patch, "Patch size (multiple of 64)");
  train->add_option("--lambda-g", tr_lambda_g, "Guidance weight (default lambda_d/10)");
  train->add_option("--loss-cap", tcfg.loss_cap, "Fixed loss cap (default: 5x EMA)");
  train->add_option("--log", tr_log, "CSV metrics log");
  train->add_option("--threads", tr_threads, "Intra-op threads");
  train->add_option("--n", tr_model.n, "Level-0 channels (new models)");
  train->add_option("--m", tr_model.m, "Bottleneck channels (new models)");
  train->add_option("--k", tr_model.k, "Hyper-latent channels (new models)");
  train->add_flag("--unpaired", tr_unpaired, "Use every image under --data as its own target");

  // ---- eval ----
  auto* evalc = app.add_subcommand("eval", "Rate-distortion evaluation on a paired corpus");
  std::string ev_data, ev_ckpt, ev_out = "report.csv", ev_plot, ev_qualities = "0..7";
  evalc->add_option("--data", ev_data, "Corpus directory (low/ and gt/)")->required();
  evalc->add_option("--ckpt", ev_ckpt, "Checkpoint file, or directory of q<i>.ckpt files")->required();
  evalc->add_option("--qualities", ev_qualities, "Quality list, e.g. 0..7 or 1,4");
  evalc->add_option("--out", ev_out, "Per-image CSV report");
  evalc->add_option("--plot", ev_plot, "RD plot image");
  evalc->add_option("--native", native_path, "Native coder library");

  // ---- pipeline ----
  auto* pipe = app.add_subcommand("pipeline", "Sequential compress/enhance baseline");
  std::string pl_mode, pl_enhancer, pl_in, pl_out, pl_ckpt, pl_work, pl_gt;
  pipe->add_option("--mode", pl_mode, "cbe | ebc")->required()->check(CLI::IsMember({"cbe", "ebc"}));
  pipe->add_option("--enhancer", pl_enhancer, "Executable called as <exe> <in.png> <out.png>")->required();
  pipe->add_option("--input", pl_in, "Low-light input image")->required();
  pipe->add_option("--output", pl_out, "Output image")->required();
  pipe->add_option("--ckpt", pl_ckpt, "Codec checkpoint")->required();
  pipe->add_option("--gt", pl_gt, "Reference image for PSNR");
  pipe->add_option("--workdir", pl_work, "Scratch directory");
  pipe->add_option("--native", native_path, "Native coder library");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*init) {
      torch::manual_seed(init_seed);
      init_cfg.snr_branch = !init_no_snr;
      JointModel model(init_cfg);
      model->update_tables();
      save_checkpoint(init_out, model);
      std::cout << "wrote " << init_out << "\n";
    } else if (*encode) {
      JointModel model = load_ready(enc_ckpt);
      if (model->config().quality_index != enc_quality) {
        throw ConfigError("checkpoint is trained for quality " +
                          std::to_string(model->config().quality_index));
      }
      const ImageTensor x = load_image(enc_in);
      const auto res = compress(x, model, codec_options(native_path));
      res.container.write(enc_out);
      std::cout << enc_out << ": " << res.container.total_size() << " bytes, "
                << bits_per_pixel(res.container) << " bpp\n";
    } else if (*decode) {
      JointModel model = load_ready(dec_ckpt);
      const auto c = BitstreamContainer::read(dec_in);
      const auto res = decompress(c, model, codec_options(native_path));
      save_image(dec_out, res.image, dec_bits);
      std::cout << "wrote " << dec_out << " (" << c.orig_width << "x" << c.orig_height << ")\n";
    } else if (*train) {
      if (tr_threads > 0) torch::set_num_threads(tr_threads);
      torch::manual_seed(tcfg.seed);
      const TrainStage stage = parse_train_stage(tr_stage);
      JointModel model = tr_in.empty() ? JointModel(tr_model) : load_checkpoint(tr_in);
      if (stage == TrainStage::kPretrain) {
        tcfg.lambda_d = kLambdaSet[4];
      } else {
        model->set_quality(tr_quality);
        tcfg.lambda_d = kLambdaSet.at(tr_quality);
      }
      tcfg.lambda_g = tr_lambda_g;
      tcfg.total_iters = tr_iters;
      PairedDataset ds = PairedDataset::open(tr_data, tr_unpaired);
      PairIterator it(ds, tcfg.patch, tcfg.seed);
      Trainer trainer(model, tcfg, stage);
      std::optional<MetricsLog> log;
      if (!tr_log.empty()) log.emplace(tr_log);
      const auto start = std::chrono::steady_clock::now();
      for (int64_t i = 0; i < tr_iters; ++i) {
        auto [low, gt] = it.next_batch(tcfg.batch);
        const StepReport r = trainer.step(low, gt);
        if (log) log->append(r);
        if (i % 50 == 0 || i + 1 == tr_iters) {
          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          std::cout << "iter " << r.iteration << " loss " << r.loss << " D " << r.distortion
                    << " Ry " << r.rate_y << " Rz " << r.rate_z << " lr " << r.lr
                    << (r.skipped ? " skipped" : "") << " (" << secs << " s)\n";
        }
      }
      model->eval();
      model->update_tables();
      save_checkpoint(tr_out, model);
      std::cout << "wrote " << tr_out << "\n";
    } else if (*evalc) {
      std::map<int, JointModel> models;
      for (int q : parse_qualities(ev_qualities)) {
        std::string path = ev_ckpt;
        if (fs::is_directory(ev_ckpt)) {
          path = (fs::path(ev_ckpt) / ("q" + std::to_string(q) + ".ckpt")).string();
          if (!fs::exists(path)) {
            std::cerr << "no checkpoint for quality " << q << ", skipping\n";
            continue;
          }
        }
        JointModel model = load_ready(path);
        if (model->config().quality_index == q) models.emplace(q, model);
      }
      if (models.empty()) throw ArgumentError("no checkpoint matches the requested qualities");
      const auto points = evaluate_corpus(ev_data, models, codec_options(native_path));
      write_rd_csv(ev_out, points);
      const auto agg = aggregate_by_quality(points);
      for (const auto& a : agg) {
        std::cout << "quality " << a.quality << ": bpp " << a.bpp << " psnr " << a.psnr
                  << " ms-ssim " << a.ms_ssim << " (" << a.ms_ssim_db << " dB)\n";
      }
      if (!ev_plot.empty()) plot_rd(ev_plot, agg);
    } else if (*pipe) {
      JointModel model = load_ready(pl_ckpt);
      if (pl_work.empty()) pl_work = (fs::temp_directory_path() / "lumen_pipeline").string();
      const ImageTensor x = crop_to_original(load_image(pl_in));
      const auto r = sequential_pipeline(x, parse_pipeline_mode(pl_mode), model, pl_enhancer,
                                         pl_work, codec_options(native_path));
      save_image(pl_out, r.output, 16);
      std::cout << "stages:";
      for (const auto& s : r.stages) std::cout << " " << s;
      std::cout << "\nbpp " << r.bpp << "\n";
      if (!pl_gt.empty()) {
        std::cout << "psnr " << psnr(crop_to_original(load_image(pl_gt)), r.output) << " dB\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return 0;
}
