#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "blur2vid/core/error.hpp"
#include "blur2vid/core/image.hpp"
#include "blur2vid/core/rng.hpp"
#include "blur2vid/geometry/geometry.hpp"

namespace blur2vid::synth {

using geom::EulerRotation;

enum class SynthMode { rotational, dynamic };

inline std::string to_string(SynthMode m) {
  return m == SynthMode::rotational ? "rotational" : "dynamic";
}

inline SynthMode synth_mode_from_string(const std::string& s) {
  if (s == "rotational") return SynthMode::rotational;
  if (s == "dynamic") return SynthMode::dynamic;
  throw validation_error("unknown synth mode: " + s);
}

struct SynthConfig {
  SynthMode mode = SynthMode::rotational;
  double rot_min_deg = -10.0;
  double rot_max_deg = 10.0;
  double frame_count_offset = 10.0;  // c in n = c + |beta|/3
  int n_dynamic = 7;
  int crop_size = 256;
  int out_size = 128;
  int samples_per_source = 4;
  std::uint64_t seed = 1;
  double cam_fov_deg = 60.0;
  double init_pitch_max_deg = 45.0;  // initial orientation pitch range
  int window_stride = 1;

  void validate() const {
    if (rot_min_deg < -180.0 || rot_max_deg > 180.0 || rot_min_deg > rot_max_deg)
      throw validation_error("SynthConfig: rotation range must be within [-180, 180]");
    if (frame_count_offset <= 0.0) throw validation_error("SynthConfig: c must be > 0");
    if (n_dynamic < 3 || n_dynamic % 2 == 0)
      throw validation_error("SynthConfig: n_dynamic must be odd and >= 3");
    if (crop_size < 1 || out_size < 1) throw validation_error("SynthConfig: bad sizes");
    if (window_stride < 1) throw validation_error("SynthConfig: stride must be >= 1");
  }
};

// One blurred observation with its ordered ground-truth sharp frames.
struct BlurSample {
  Image blurred;
  std::vector<Image> frames;  // temporal order
  EulerRotation<double> rotation;  // rotational mode only
  int n = 0;
  std::uint64_t seed = 0;
  SynthMode mode = SynthMode::rotational;
  int crop_x = -1, crop_y = -1;  // dynamic mode only

  int middle_index() const { return static_cast<int>(std::llround((n - 1) / 2.0)); }
};

// Number of latent frames for a rotation of magnitude |beta|:
// round(c + |beta|/3), clamped so initial/middle/final frames exist.
inline int frame_count(const EulerRotation<double>& beta, double c) {
  if (c <= 0.0) throw validation_error("frame_count: c must be > 0");
  const long n = std::lround(c + beta.magnitude() / 3.0);
  return static_cast<int>(n < 3 ? 3 : n);
}

inline Image average_frames(const std::vector<Image>& frames) { return average_images(frames); }

// Renders n views along the slerp path between a random initial
// orientation and that orientation rotated by a random beta, then
// averages them. Deterministic given rng_seed.
inline BlurSample generate_rotational_sample(const Image& pano, const SynthConfig& cfg,
                                             std::uint64_t rng_seed) {
  cfg.validate();
  check_image(pano, "generate_rotational_sample");
  if (pano.dim(1) != 2 * pano.dim(0))
    throw validation_error("generate_rotational_sample: panorama must be 2:1 (got " +
                           pano.shape_str() + ")");

  Rng rng(rng_seed);
  EulerRotation<double> init{0.0, rng.uniform(-cfg.init_pitch_max_deg, cfg.init_pitch_max_deg),
                             rng.uniform(-180.0, 180.0)};
  EulerRotation<double> beta{rng.uniform(cfg.rot_min_deg, cfg.rot_max_deg),
                             rng.uniform(cfg.rot_min_deg, cfg.rot_max_deg),
                             rng.uniform(cfg.rot_min_deg, cfg.rot_max_deg)};

  const auto q_init = geom::euler_to_quaternion(init);
  const auto q_final = q_init * geom::euler_to_quaternion(beta);  // rotate in camera frame
  const int n = frame_count(beta, cfg.frame_count_offset);

  geom::VirtualCamera cam{cfg.cam_fov_deg, cfg.out_size, cfg.out_size};
  BlurSample sample;
  sample.mode = SynthMode::rotational;
  sample.rotation = beta;
  sample.n = n;
  sample.seed = rng_seed;
  sample.frames.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    sample.frames.push_back(geom::render_view(pano, geom::slerp(q_init, q_final, t), cam));
  }
  sample.blurred = average_frames(sample.frames);
  return sample;
}

// Averages an n_dynamic window of consecutive video frames under a random
// crop. Frames must arrive in temporal order with equal sizes.
inline BlurSample generate_dynamic_sample(const std::vector<Image>& frames_in,
                                          const SynthConfig& cfg, std::uint64_t rng_seed) {
  cfg.validate();
  const int n = cfg.n_dynamic;
  if (static_cast<int>(frames_in.size()) < n)
    throw validation_error("generate_dynamic_sample: window of " + std::to_string(n) +
                           " frames exceeds available " + std::to_string(frames_in.size()));
  for (const auto& f : frames_in) {
    check_image(f, "generate_dynamic_sample");
    if (!f.same_shape(frames_in[0]))
      throw validation_error("generate_dynamic_sample: frames differ in size");
  }
  const Eigen::Index h = frames_in[0].dim(0), w = frames_in[0].dim(1);
  if (cfg.crop_size > h || cfg.crop_size > w)
    throw validation_error("generate_dynamic_sample: crop exceeds frame size");

  Rng rng(rng_seed);
  const int start = rng.uniform_int(0, static_cast<int>(frames_in.size()) - n);
  const int cx = rng.uniform_int(0, static_cast<int>(w) - cfg.crop_size);
  const int cy = rng.uniform_int(0, static_cast<int>(h) - cfg.crop_size);

  BlurSample sample;
  sample.mode = SynthMode::dynamic;
  sample.n = n;
  sample.seed = rng_seed;
  sample.crop_x = cx;
  sample.crop_y = cy;
  sample.frames.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Image& src = frames_in[static_cast<size_t>(start + i)];
    Image crop({cfg.crop_size, cfg.crop_size, src.dim(2)});
    for (Eigen::Index y = 0; y < cfg.crop_size; ++y)
      for (Eigen::Index x = 0; x < cfg.crop_size; ++x)
        for (Eigen::Index ch = 0; ch < src.dim(2); ++ch)
          crop(y, x, ch) = src(cy + y, cx + x, ch);
    sample.frames.push_back(std::move(crop));
  }
  sample.blurred = average_frames(sample.frames);
  return sample;
}

// Ground-truth frames for an n_pred-frame prediction task. A 3-frame task
// uses the (initial, middle, final) triple; otherwise the stored frame
// count must match.
inline std::vector<Image> gt_frames_for(const BlurSample& sample, int n_pred) {
  if (n_pred == sample.n) return sample.frames;
  if (n_pred == 3 && sample.n >= 3) {
    return {sample.frames.front(), sample.frames[static_cast<size_t>(sample.middle_index())],
            sample.frames.back()};
  }
  throw validation_error("dataset/model frame-count mismatch: model predicts " +
                         std::to_string(n_pred) + " frames, sample stores " +
                         std::to_string(sample.n));
}

inline int available_windows(int frame_total, int n, int stride) {
  if (frame_total < n) return 0;
  return (frame_total - n) / stride + 1;
}

}  // namespace blur2vid::synth
