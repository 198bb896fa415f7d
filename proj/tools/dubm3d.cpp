// Command-line front end: simulate paired dose data, train the learnable
// denoisers, denoise single images, evaluate metrics, and produce the
// cross-dose benchmark tables.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dub/dataset.hpp"
#include "dub/errors.hpp"
#include "dub/image.hpp"
#include "dub/ldct.hpp"
#include "dub/metrics.hpp"
#include "dub/phantom.hpp"
#include "dub/pipeline.hpp"
#include "dub/rng.hpp"
#include "dub/training.hpp"

namespace fs = std::filesystem;
using namespace dub;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct MatchFlags {
  int patch = 8, stride = 4, window = 12, group = 8;
};

void add_match_flags(CLI::App* cmd, MatchFlags& f) {
  cmd->add_option("--patch", f.patch, "patch side")->capture_default_str();
  cmd->add_option("--stride", f.stride, "reference grid step")
      ->capture_default_str();
  cmd->add_option("--window", f.window, "search half-extent")
      ->capture_default_str();
  cmd->add_option("--group", f.group, "patches per group")
      ->capture_default_str();
}

MatchConfig to_match_config(const MatchFlags& f) {
  MatchConfig m;
  m.patch = f.patch;
  m.stride = f.stride;
  m.window = f.window;
  m.group_size = f.group;
  return m;
}

struct SplitFlags {
  double train = 0.69, val = 0.14, test = 0.17;
  uint64_t seed = 1;
};

void add_split_flags(CLI::App* cmd, SplitFlags& f) {
  cmd->add_option("--split-train", f.train, "train fraction")
      ->capture_default_str();
  cmd->add_option("--split-val", f.val, "validation fraction")
      ->capture_default_str();
  cmd->add_option("--split-test", f.test, "test fraction")
      ->capture_default_str();
  cmd->add_option("--split-seed", f.seed, "shuffle seed for the split")
      ->capture_default_str();
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string out;
  int count = 16;
  int size = 64;
  std::string kind = "disks";
  std::vector<double> photons = {1e4, 5e4, 1e5, 5e5};
  double mu_max = 4.0;
  std::string mode = "image";
  uint64_t seed = 7;
};

int run_simulate(const SimulateArgs& a) {
  fs::create_directories(a.out);
  std::vector<ManifestRow> rows;
  for (int i = 0; i < a.count; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "img%03d", i);
    const Image clean =
        make_phantom(a.kind, a.size, a.size, derive_seed(a.seed, uint64_t(i)));
    write_image(clean, (fs::path(a.out) / clean_filename(stem)).string(),
                ImageFormat::F32Raw);
    for (size_t d = 0; d < a.photons.size(); ++d) {
      const uint64_t child = derive_seed(
          a.seed, uint64_t(a.count) + uint64_t(i) * a.photons.size() + d);
      NoiseConfig ncfg;
      ncfg.photons = a.photons[d];
      ncfg.mu_max = a.mu_max;
      ncfg.mode = a.mode;
      ncfg.seed = child;
      const Image noisy = simulate_low_dose(clean, ncfg);
      write_image(noisy,
                  (fs::path(a.out) / noisy_filename(stem, a.photons[d])).string(),
                  ImageFormat::F32Raw);
      rows.push_back({stem, a.photons[d], child, a.mode});
    }
  }
  const std::string manifest = (fs::path(a.out) / "manifest.csv").string();
  write_manifest(manifest, rows);
  std::printf("wrote %d images x %zu doses to %s\n", a.count,
              a.photons.size(), manifest.c_str());
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string out;
  std::string mode = "du-bm3d";
  double photons = 1e5;
  int epochs = 20;
  int batch = 16;
  double lr = 1e-3;
  uint64_t seed = 0;
  int width = 16;
  MatchFlags match;
  SplitFlags split;
};

int run_train(const TrainArgs& a) {
  const TrainMode mode = parse_train_mode(a.mode);
  const MatchConfig mcfg = to_match_config(a.match);

  std::vector<TrainPair> pairs = load_pairs(a.manifest, a.photons);
  const Split split = split_dataset(int(pairs.size()), a.split.train,
                                    a.split.val, a.split.test, a.split.seed);
  std::vector<TrainPair> train_pairs, val_pairs;
  for (int i : split.train) train_pairs.push_back(pairs[size_t(i)]);
  for (int i : split.val) val_pairs.push_back(pairs[size_t(i)]);

  UnetDescriptor desc;
  desc.channels = mode == TrainMode::DuBm3d ? mcfg.group_size : 1;
  desc.width = a.width;
  desc.patch = mcfg.patch;

  TrainConfig tcfg;
  tcfg.epochs = a.epochs;
  tcfg.batch_size = a.batch;
  tcfg.lr = a.lr;
  tcfg.seed = a.seed;
  tcfg.mode = mode;

  Trainer trainer(std::move(train_pairs), init_params(desc, a.seed), mcfg,
                  tcfg);
  std::printf("training %s on %zu images (%zu held out for validation)\n",
              a.mode.c_str(), split.train.size(), val_pairs.size());
  for (int e = 0; e < a.epochs; ++e) {
    const double loss = trainer.run_epoch(e);
    if (val_pairs.empty()) {
      std::printf("epoch %2d  train_loss %.6e\n", e + 1, loss);
    } else {
      const double val =
          evaluate_loss(val_pairs, trainer.params(), mcfg, mode);
      std::printf("epoch %2d  train_loss %.6e  val_loss %.6e\n", e + 1, loss,
                  val);
    }
    std::fflush(stdout);
  }
  save_checkpoint(a.out, make_checkpoint(trainer.params(), &trainer.state(),
                                         trainer.steps()));
  std::printf("saved checkpoint %s after %llu steps\n", a.out.c_str(),
              (unsigned long long)trainer.steps());
  return 0;
}

// ---- denoise ----------------------------------------------------------------

struct DenoiseArgs {
  std::string input, output;
  std::string method;
  std::string checkpoint;
  double sigma = -1.0;
  MatchFlags match;
};

int run_denoise(const DenoiseArgs& a) {
  const Method method = parse_method(a.method);
  const MatchConfig mcfg = to_match_config(a.match);
  const Image noisy = read_image(a.input);

  ModelParams params;
  const ModelParams* params_ptr = nullptr;
  if (method == Method::DuBm3d || method == Method::UnetImage) {
    if (a.checkpoint.empty())
      throw std::invalid_argument("--checkpoint is required for " + a.method);
    params = params_from_checkpoint(load_checkpoint(a.checkpoint));
    params_ptr = &params;
  }

  const Image out = denoise_pipeline(noisy, method, params_ptr, mcfg, a.sigma);

  const std::string ext = fs::path(a.output).extension().string();
  ImageFormat ofmt;
  if (ext == ".f32") ofmt = ImageFormat::F32Raw;
  else if (ext == ".pgm") ofmt = ImageFormat::Pgm16;
  else
    throw std::invalid_argument("output extension must be .f32 or .pgm, got '" +
                                ext + "'");
  write_image(out, a.output, ofmt);
  std::printf("wrote %s\n", a.output.c_str());
  return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string test, ref;
  double peak = 1.0;
};

int run_eval(const EvalArgs& a) {
  const Image test = read_image(a.test);
  const Image ref = read_image(a.ref);
  std::printf("psnr_db,ssim\n%s,%s\n", fmt("%.6f", psnr(test, ref, a.peak)).c_str(),
              fmt("%.6f", ssim(test, ref, a.peak)).c_str());
  return 0;
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  std::string manifest;
  std::string checkpoint;        // du-bm3d
  std::string checkpoint_image;  // unet-image
  std::string out_metrics = "metrics.csv";
  std::string out_profile = "profile.csv";
  std::vector<double> photons = {1e4, 5e4, 1e5, 5e5};
  double sigma = -1.0;
  double peak = 1.0;
  MatchFlags match;
  SplitFlags split;
};

int run_bench(const BenchArgs& a) {
  const MatchConfig mcfg = to_match_config(a.match);

  ModelParams du_params, im_params;
  std::vector<std::pair<Method, const ModelParams*>> methods;
  methods.emplace_back(Method::Noisy, nullptr);
  methods.emplace_back(Method::Bm3dClassic, nullptr);
  if (!a.checkpoint.empty()) {
    du_params = params_from_checkpoint(load_checkpoint(a.checkpoint));
    if (du_params.desc.channels != mcfg.group_size)
      throw DataError("checkpoint " + a.checkpoint +
                      " was trained with a different group size");
    methods.emplace_back(Method::DuBm3d, &du_params);
  }
  if (!a.checkpoint_image.empty()) {
    im_params = params_from_checkpoint(load_checkpoint(a.checkpoint_image));
    if (im_params.desc.channels != 1)
      throw DataError("checkpoint " + a.checkpoint_image +
                      " is not an image-mode model");
    methods.emplace_back(Method::UnetImage, &im_params);
  }

  // The held-out test subset; indices refer to manifest stem order so the
  // same split seed reproduces the training command's partition.
  const std::vector<std::string> stems =
      manifest_stems(read_manifest(a.manifest));
  const Split split = split_dataset(int(stems.size()), a.split.train,
                                    a.split.val, a.split.test, a.split.seed);
  if (split.test.empty())
    throw std::invalid_argument(
        "test split is empty; add images or raise --split-test");

  std::ofstream metrics(a.out_metrics);
  if (!metrics)
    throw DataError("cannot open " + a.out_metrics + " for writing");
  metrics << "photons,method,psnr_db,ssim,n_images\n";

  std::vector<TrainPair> timing_set;
  for (double dose : a.photons) {
    std::vector<TrainPair> all = load_pairs(a.manifest, dose);
    std::vector<TrainPair> test;
    for (int i : split.test) test.push_back(all[size_t(i)]);
    if (timing_set.empty()) timing_set = test;
    for (const auto& [method, params] : methods) {
      double psnr_sum = 0.0, ssim_sum = 0.0;
      for (const TrainPair& pair : test) {
        const Image out =
            denoise_pipeline(pair.noisy, method, params, mcfg, a.sigma);
        psnr_sum += psnr(out, pair.clean, a.peak);
        ssim_sum += ssim(out, pair.clean, a.peak);
      }
      metrics << photons_tag(dose) << "," << method_name(method) << ","
              << fmt("%.6f", psnr_sum / test.size()) << ","
              << fmt("%.6f", ssim_sum / test.size()) << "," << test.size()
              << "\n";
    }
    std::printf("dose %s done\n", photons_tag(dose).c_str());
    std::fflush(stdout);
  }
  metrics.close();

  std::ofstream profile(a.out_profile);
  if (!profile)
    throw DataError("cannot open " + a.out_profile + " for writing");
  profile << "method,param_count,mean_inference_ms\n";
  for (const auto& [method, params] : methods) {
    const size_t n_params =
        params != nullptr ? param_count(params->desc) : 0;
    std::array<double, 3> runs{};
    for (double& r : runs) {
      const auto t0 = std::chrono::steady_clock::now();
      for (const TrainPair& pair : timing_set)
        denoise_pipeline(pair.noisy, method, params, mcfg, a.sigma);
      const auto t1 = std::chrono::steady_clock::now();
      r = std::chrono::duration<double, std::milli>(t1 - t0).count() /
          double(timing_set.size());
    }
    std::sort(runs.begin(), runs.end());
    profile << method_name(method) << "," << n_params << ","
            << fmt("%.3f", runs[1]) << "\n";
  }
  std::printf("wrote %s and %s\n", a.out_metrics.c_str(),
              a.out_profile.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block-matched collaborative denoising pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "",
                 "INI file with options in [subcommand] sections");

  SimulateArgs sim;
  CLI::App* c_sim =
      app.add_subcommand("simulate", "generate paired dose data");
  c_sim->add_option("--out", sim.out, "output directory")->required();
  c_sim->add_option("--count", sim.count, "number of images")
      ->capture_default_str();
  c_sim->add_option("--size", sim.size, "image side")->capture_default_str();
  c_sim->add_option("--kind", sim.kind, "phantom family")
      ->capture_default_str();
  c_sim->add_option("--photons", sim.photons, "dose levels (repeatable)")
      ->capture_default_str();
  c_sim->add_option("--mu-max", sim.mu_max, "attenuation of a 1.0 pixel")
      ->capture_default_str();
  c_sim->add_option("--mode", sim.mode, "image or projection")
      ->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "master seed")->capture_default_str();

  TrainArgs tr;
  CLI::App* c_tr = app.add_subcommand("train", "optimize a denoiser");
  c_tr->add_option("--manifest", tr.manifest, "simulation manifest")
      ->required();
  c_tr->add_option("--out", tr.out, "checkpoint path")->required();
  c_tr->add_option("--mode", tr.mode, "du-bm3d or unet-image")
      ->capture_default_str();
  c_tr->add_option("--photons", tr.photons, "training dose")
      ->capture_default_str();
  c_tr->add_option("--epochs", tr.epochs, "epochs")->capture_default_str();
  c_tr->add_option("--batch", tr.batch, "batch size")->capture_default_str();
  c_tr->add_option("--lr", tr.lr, "learning rate")->capture_default_str();
  c_tr->add_option("--seed", tr.seed, "init and shuffle seed")
      ->capture_default_str();
  c_tr->add_option("--width", tr.width, "network width")
      ->capture_default_str();
  add_match_flags(c_tr, tr.match);
  add_split_flags(c_tr, tr.split);

  DenoiseArgs dn;
  CLI::App* c_dn = app.add_subcommand("denoise", "denoise one image");
  c_dn->add_option("--input", dn.input, "noisy image (.pgm or .f32)")
      ->required();
  c_dn->add_option("--output", dn.output, "output image (.pgm or .f32)")
      ->required();
  c_dn->add_option("--method", dn.method,
                   "noisy, bm3d-classic, du-bm3d, or unet-image")
      ->required();
  c_dn->add_option("--checkpoint", dn.checkpoint, "trained model");
  c_dn->add_option("--sigma", dn.sigma,
                   "noise level for bm3d-classic (<=0 estimates it)")
      ->capture_default_str();
  add_match_flags(c_dn, dn.match);

  EvalArgs ev;
  CLI::App* c_ev = app.add_subcommand("eval", "psnr/ssim of an image pair");
  c_ev->add_option("--test", ev.test, "image under test")->required();
  c_ev->add_option("--ref", ev.ref, "reference image")->required();
  c_ev->add_option("--peak", ev.peak, "peak intensity")->capture_default_str();

  BenchArgs bn;
  CLI::App* c_bn =
      app.add_subcommand("bench", "cross-dose benchmark tables");
  c_bn->add_option("--manifest", bn.manifest, "simulation manifest")
      ->required();
  c_bn->add_option("--checkpoint", bn.checkpoint, "group-filter checkpoint");
  c_bn->add_option("--checkpoint-image", bn.checkpoint_image,
                   "image-mode checkpoint");
  c_bn->add_option("--out-metrics", bn.out_metrics, "metrics CSV path")
      ->capture_default_str();
  c_bn->add_option("--out-profile", bn.out_profile, "profile CSV path")
      ->capture_default_str();
  c_bn->add_option("--photons", bn.photons, "dose levels (repeatable)")
      ->capture_default_str();
  c_bn->add_option("--sigma", bn.sigma,
                   "noise level for bm3d-classic (<=0 estimates it)")
      ->capture_default_str();
  c_bn->add_option("--peak", bn.peak, "peak intensity for metrics")
      ->capture_default_str();
  add_match_flags(c_bn, bn.match);
  add_split_flags(c_bn, bn.split);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_tr->parsed()) return run_train(tr);
    if (c_dn->parsed()) return run_denoise(dn);
    if (c_ev->parsed()) return run_eval(ev);
    if (c_bn->parsed()) return run_bench(bn);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 4;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
