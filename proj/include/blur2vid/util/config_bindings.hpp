#pragma once

#include "blur2vid/network/model.hpp"
#include "blur2vid/objectives/losses.hpp"
#include "blur2vid/synth/blur_synth.hpp"
#include "blur2vid/train/trainer.hpp"
#include "blur2vid/util/config.hpp"

namespace blur2vid::util {

inline synth::SynthConfig parse_synth_config(const Config& cfg) {
  synth::SynthConfig s;
  s.mode = synth::synth_mode_from_string(cfg.get_string("synth", "mode", "rotational"));
  s.rot_min_deg = cfg.get_double("synth", "rotation_min", -10.0);
  s.rot_max_deg = cfg.get_double("synth", "rotation_max", 10.0);
  s.frame_count_offset = cfg.get_double("synth", "c", 10.0);
  s.n_dynamic = cfg.get_int("synth", "n_dynamic", 7);
  s.crop_size = cfg.get_int("synth", "crop_size", 256);
  s.out_size = cfg.get_int("synth", "out_size", 128);
  s.samples_per_source = cfg.get_int("synth", "samples_per_source", 4);
  s.seed = cfg.get_u64("synth", "seed", 1);
  s.cam_fov_deg = cfg.get_double("synth", "cam_fov", 60.0);
  s.init_pitch_max_deg = cfg.get_double("synth", "init_pitch_max", 45.0);
  s.window_stride = cfg.get_int("synth", "window_stride", 1);
  s.validate();
  return s;
}

inline nn::NetworkConfig parse_network_config(const Config& cfg) {
  nn::NetworkConfig n;
  n.levels = cfg.get_int("network", "levels", 5);
  n.frames = cfg.get_int("network", "frames", 3);
  n.width_mult = cfg.get_double("network", "width_mult", 1.0);
  n.use_lw = cfg.get_bool("network", "use_lw", true);
  n.use_itn = cfg.get_bool("network", "use_itn", true);
  n.use_refiner = cfg.get_bool("network", "use_refiner", true);
  n.share_nonmiddle = cfg.get_bool("network", "share_nonmiddle", false);
  n.lrelu_slope = cfg.get_double("network", "lrelu_slope", 0.1);
  n.init_seed = cfg.get_u64("network", "init_seed", 1);
  n.validate();
  return n;
}

inline loss::LossWeights parse_loss_weights(const Config& cfg, int levels) {
  loss::LossWeights w = loss::LossWeights::defaults(levels);
  if (cfg.has("loss", "level_weights")) {
    const auto raw = cfg.get_string("loss", "level_weights", "");
    w.w.clear();
    std::istringstream is(raw);
    std::string item;
    while (std::getline(is, item, ',')) {
      try {
        w.w.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw validation_error("loss.level_weights: bad entry: " + item);
      }
    }
    if (static_cast<int>(w.w.size()) != levels)
      throw validation_error("loss.level_weights: expected " + std::to_string(levels) +
                             " entries");
  } else {
    // Record the effective default in the resolved echo.
    std::ostringstream os;
    for (size_t i = 0; i < w.w.size(); ++i) os << (i ? "," : "") << w.w[i];
    cfg.get_string("loss", "level_weights", os.str());
  }
  w.lambda_tc = cfg.get_double("loss", "lambda_tc", 0.1);
  w.lambda_p = cfg.get_double("loss", "lambda_p", 0.01);
  w.use_tcl = cfg.get_bool("loss", "use_tcl", true);
  w.use_pt = cfg.get_bool("loss", "use_pt", true);
  w.include_itn_theta = cfg.get_bool("loss", "include_itn_theta", false);
  w.validate();
  return w;
}

inline trainer::TrainConfig parse_train_config(const Config& cfg) {
  trainer::TrainConfig t;
  t.lr = cfg.get_double("train", "lr", 1e-4);
  t.beta1 = cfg.get_double("train", "beta1", 0.9);
  t.beta2 = cfg.get_double("train", "beta2", 0.999);
  t.adam_eps = cfg.get_double("train", "adam_eps", 1e-8);
  t.epochs = cfg.get_int("train", "epochs", 80);
  t.decay_epochs = cfg.get_int_list("train", "decay_epochs", {40, 60});
  t.batch = cfg.get_int("train", "batch", 8);
  t.seed = cfg.get_u64("train", "seed", 1);
  t.max_iters = cfg.get_int("train", "max_iters", 0);
  t.checkpoint_every = cfg.get_int("train", "checkpoint_every", 0);
  t.threads = cfg.get_int("train", "threads", 0);
  t.grad_clip = cfg.get_double("train", "grad_clip", 0.0);
  t.validate();
  return t;
}

}  // namespace blur2vid::util
