#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "blur2vid/core/image_io.hpp"
#include "blur2vid/gradcheck/gradcheck.hpp"
#include "blur2vid/network/checkpoint.hpp"
#include "blur2vid/synth/dataset.hpp"
#include "blur2vid/train/trainer.hpp"
#include "blur2vid/util/config_bindings.hpp"

namespace fs = std::filesystem;
using namespace blur2vid;

namespace {

util::Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  util::Config cfg = path.empty() ? util::Config() : util::Config::from_file(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw validation_error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

void echo_config(const util::Config& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  cfg.write_resolved(out_dir / "config_resolved.ini");
}

int cmd_gen_pano(const util::Config& cfg, const fs::path& pano_dir, const fs::path& out_dir) {
  const synth::SynthConfig scfg = util::parse_synth_config(cfg);
  const auto files = list_pngs(pano_dir);
  std::vector<fs::path> valid;
  for (const auto& f : files) {
    const Image pano = read_png(f.string());
    if (pano.dim(1) != 2 * pano.dim(0)) {
      std::cerr << "warning: skipping non-2:1 panorama " << f << " " << pano.shape_str() << "\n";
      continue;
    }
    valid.push_back(f);
  }
  if (valid.empty()) throw validation_error("no valid 2:1 panoramas in " + pano_dir.string());

  synth::DatasetManifest header;
  header.mode = synth::SynthMode::rotational;
  header.frame_count_offset = scfg.frame_count_offset;
  header.rot_min_deg = scfg.rot_min_deg;
  header.rot_max_deg = scfg.rot_max_deg;
  header.n_dynamic = scfg.n_dynamic;
  header.seed = scfg.seed;
  synth::DatasetWriter writer(out_dir, header);

  std::map<int, int> n_hist;
  std::uint64_t index = 0;
  for (const auto& f : valid) {
    const Image pano = read_png(f.string());
    for (int s = 0; s < scfg.samples_per_source; ++s) {
      const auto sample =
          synth::generate_rotational_sample(pano, scfg, derive_seed(scfg.seed, index++));
      ++n_hist[sample.n];
      writer.add(sample);
    }
  }
  writer.finalize();
  echo_config(cfg, out_dir);

  std::cout << "wrote " << writer.count() << " samples from " << valid.size()
            << " panoramas to " << out_dir << "\n";
  std::cout << "n histogram:";
  for (const auto& [n, count] : n_hist) std::cout << " " << n << ":" << count;
  std::cout << "\n";
  return 0;
}

int cmd_gen_video(const util::Config& cfg, const fs::path& frames_dir, const fs::path& out_dir) {
  const synth::SynthConfig base = util::parse_synth_config(cfg);
  synth::SynthConfig scfg = base;
  scfg.mode = synth::SynthMode::dynamic;

  // Each subdirectory is one scene of temporally ordered frames; a flat
  // directory of frames is treated as a single scene.
  std::vector<fs::path> scenes;
  if (!fs::is_directory(frames_dir))
    throw validation_error("not a directory: " + frames_dir.string());
  for (const auto& e : fs::directory_iterator(frames_dir))
    if (e.is_directory()) scenes.push_back(e.path());
  std::sort(scenes.begin(), scenes.end());
  if (scenes.empty()) scenes.push_back(frames_dir);

  synth::DatasetManifest header;
  header.mode = synth::SynthMode::dynamic;
  header.frame_count_offset = scfg.frame_count_offset;
  header.rot_min_deg = scfg.rot_min_deg;
  header.rot_max_deg = scfg.rot_max_deg;
  header.n_dynamic = scfg.n_dynamic;
  header.seed = scfg.seed;
  synth::DatasetWriter writer(out_dir, header);

  std::uint64_t index = 0;
  for (const auto& scene : scenes) {
    const auto files = list_pngs(scene);
    if (static_cast<int>(files.size()) < scfg.n_dynamic) {
      std::cerr << "warning: skipping scene " << scene << " with " << files.size()
                << " frames (< " << scfg.n_dynamic << ")\n";
      continue;
    }
    std::vector<Image> frames;
    for (const auto& f : files) frames.push_back(read_png(f.string()));

    const int windows = synth::available_windows(static_cast<int>(frames.size()),
                                                 scfg.n_dynamic, scfg.window_stride);
    std::vector<int> starts;
    for (int w = 0; w < windows; ++w) starts.push_back(w * scfg.window_stride);
    if (scfg.samples_per_source > 0 && static_cast<int>(starts.size()) > scfg.samples_per_source) {
      Rng pick(derive_seed(scfg.seed, fnv1a(scene.string())));
      for (size_t i = starts.size(); i > 1; --i)
        std::swap(starts[i - 1],
                  starts[static_cast<size_t>(pick.uniform_int(0, static_cast<int>(i) - 1))]);
      starts.resize(static_cast<size_t>(scfg.samples_per_source));
      std::sort(starts.begin(), starts.end());
    }

    for (int start : starts) {
      const std::vector<Image> window(frames.begin() + start,
                                      frames.begin() + start + scfg.n_dynamic);
      writer.add(synth::generate_dynamic_sample(window, scfg, derive_seed(scfg.seed, index++)));
    }
  }
  if (writer.count() == 0) throw validation_error("no usable scenes in " + frames_dir.string());
  writer.finalize();
  echo_config(cfg, out_dir);
  std::cout << "wrote " << writer.count() << " samples to " << out_dir << "\n";
  return 0;
}

int cmd_train(const util::Config& cfg, const fs::path& data_dir, const fs::path& run_dir) {
  const auto net_cfg = util::parse_network_config(cfg);
  const auto train_cfg = util::parse_train_config(cfg);
  const auto weights = util::parse_loss_weights(cfg, net_cfg.levels);

  synth::DiskDataset data(data_dir);
  nn::Model model(net_cfg);

  fs::create_directories(run_dir);
  echo_config(cfg, run_dir);
  std::cout << "run dir: " << fs::absolute(run_dir) << "\n";
  std::cout << "dataset: " << fs::absolute(data_dir) << " (" << data.size() << " samples)\n";
  std::cout << "parameters: " << model.params().total_size() << "\n";

  const auto t0 = std::chrono::steady_clock::now();
  const auto log = trainer::train(data, model, train_cfg, weights, run_dir,
                                  [](const trainer::IterationRecord& r) {
                                    if (r.iter % 25 == 0 || r.iter == 1)
                                      std::cout << "iter " << r.iter << " epoch " << r.epoch
                                                << " lr " << r.lr << " loss " << r.total
                                                << " (mp " << r.l_mp << ")\n";
                                  });
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "finished " << log.iterations.size() << " iterations in " << secs << "s\n";
  std::cout << "checkpoint: " << (run_dir / "final.b2v") << "\n";
  std::cout << "run log: " << (run_dir / "runlog.csv") << "\n";
  return 0;
}

nn::Model load_model_checked(const util::Config& cfg, const std::string& ckpt_path) {
  const nn::NetworkConfig stored = nn::load_checkpoint_config(ckpt_path);
  if (cfg.has("network", "frames") || cfg.has("network", "levels") ||
      cfg.has("network", "width_mult")) {
    const nn::NetworkConfig requested = util::parse_network_config(cfg);
    if (!(requested == stored)) {
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "checkpoint/config mismatch: config hash %016llx vs checkpoint hash %016llx",
                    static_cast<unsigned long long>(requested.hash()),
                    static_cast<unsigned long long>(stored.hash()));
      throw validation_error(buf);
    }
  }
  return nn::load_checkpoint(ckpt_path);
}

int cmd_eval(const util::Config& cfg, const fs::path& data_dir, const std::string& ckpt,
             const fs::path& out_dir, bool curve, const std::string& train_label,
             const std::string& eval_label) {
  nn::Model model = load_model_checked(cfg, ckpt);
  synth::DiskDataset data(data_dir);

  trainer::EvalOptions opts;
  opts.bin_by_rotation = curve && data.manifest().mode == synth::SynthMode::rotational;
  opts.bin_width_deg = cfg.get_double("eval", "rotation_bin_deg", 2.5);
  opts.train_label = train_label;
  opts.eval_label =
      eval_label.empty() ? synth::to_string(data.manifest().mode) : eval_label;

  const auto result = trainer::evaluate(data, trainer::model_predictor(model),
                                        model.config().frames, opts);
  fs::create_directories(out_dir);
  echo_config(cfg, out_dir);
  result.write_csv(out_dir / "metrics.csv");
  result.write_json(out_dir / "aggregate.json");
  if (opts.bin_by_rotation) result.write_curve_csv(out_dir / "psnr_vs_rotation.csv");

  std::cout << result.aggregate_json().dump(2) << "\n";
  std::cout << "reports in " << fs::absolute(out_dir) << "\n";
  return 0;
}

int cmd_infer(const util::Config& cfg, const std::vector<std::string>& inputs,
              const std::string& ckpt, const fs::path& out_dir) {
  nn::Model model = load_model_checked(cfg, ckpt);
  fs::create_directories(out_dir);
  echo_config(cfg, out_dir);
  for (const auto& input : inputs) {
    const Image blur = read_png(input);
    const auto pred = model.predict(blur);
    const fs::path dir = out_dir / fs::path(input).stem();
    fs::create_directories(dir);
    std::vector<Image> frames;
    for (size_t j = 0; j < pred.refined.size(); ++j) {
      frames.push_back(clamp01(pred.refined[j].value()));
      write_png((dir / synth::frame_file_name(static_cast<int>(j))).string(), frames.back());
    }
    write_png((dir / "contact_sheet.png").string(), hstack(frames));
    std::cout << input << " -> " << pred.refined.size() << " frames in " << dir << "\n";
  }
  return 0;
}

int cmd_gradcheck() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = gradcheck::run_standard_gradchecks();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool all_pass = true;
  std::printf("%-28s %10s %14s %10s\n", "operator", "instances", "max_rel_err", "status");
  for (const auto& r : results) {
    std::printf("%-28s %10d %14.3e %10s\n", r.name.c_str(), r.instances, r.max_rel_err,
                r.pass ? "pass" : "FAIL");
    all_pass &= r.pass;
  }
  std::printf("%zu operators checked in %.1fs\n", results.size(), secs);
  if (!all_pass) {
    std::cerr << "gradient check failed for:";
    for (const auto& r : results)
      if (!r.pass) std::cerr << " " << r.name;
    std::cerr << "\n";
    throw numeric_error("gradient check failure");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blur2vid: motion-blur synthesis and blurred-image-to-video restoration"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "config file (ini)");
  app.add_option("--set", overrides, "override config values (section.key=value)");

  std::string panoramas, frames_dir, data_dir, out_dir, run_dir, ckpt, train_label, eval_label;
  std::vector<std::string> infer_inputs;
  bool curve = false;

  auto* gen_pano = app.add_subcommand("gen-pano", "rotational-blur dataset from panoramas");
  gen_pano->add_option("--panoramas", panoramas, "directory of 2:1 PNG panoramas")->required();
  gen_pano->add_option("--out", out_dir, "output dataset directory")->required();

  auto* gen_video = app.add_subcommand("gen-video", "dynamic-blur dataset from video frames");
  gen_video->add_option("--frames", frames_dir, "directory of per-scene frame PNGs")->required();
  gen_video->add_option("--out", out_dir, "output dataset directory")->required();

  auto* train = app.add_subcommand("train", "train the restoration model");
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", run_dir, "run directory")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  eval->add_option("--out", out_dir, "report directory")->required();
  eval->add_flag("--curve", curve, "emit PSNR-vs-rotation-magnitude curve data");

  auto* cross = app.add_subcommand("cross-eval", "evaluate across datasets with labels");
  cross->add_option("--data", data_dir, "target dataset directory")->required();
  cross->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  cross->add_option("--out", out_dir, "report directory")->required();
  cross->add_option("--train-label", train_label, "label of the training dataset")->required();
  cross->add_option("--eval-label", eval_label, "label of the evaluation dataset");
  cross->add_flag("--curve", curve, "emit PSNR-vs-rotation-magnitude curve data");

  auto* infer = app.add_subcommand("infer", "restore frames from blurred images");
  infer->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  infer->add_option("--input", infer_inputs, "blurred PNG image(s)")->required();
  infer->add_option("--out", out_dir, "output directory")->required();

  app.add_subcommand("gradcheck", "finite-difference checks of all differentiable operators");

  CLI11_PARSE(app, argc, argv);

  try {
    const util::Config cfg = load_config(config_path, overrides);
    if (gen_pano->parsed()) return cmd_gen_pano(cfg, panoramas, out_dir);
    if (gen_video->parsed()) return cmd_gen_video(cfg, frames_dir, out_dir);
    if (train->parsed()) return cmd_train(cfg, data_dir, run_dir);
    if (eval->parsed()) return cmd_eval(cfg, data_dir, ckpt, out_dir, curve, "", eval_label);
    if (cross->parsed())
      return cmd_eval(cfg, data_dir, ckpt, out_dir, curve, train_label, eval_label);
    if (infer->parsed()) return cmd_infer(cfg, infer_inputs, ckpt, out_dir);
    return cmd_gradcheck();
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
