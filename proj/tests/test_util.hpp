#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "blur2vid/core/image.hpp"
#include "blur2vid/core/rng.hpp"
#include "blur2vid/geometry/geometry.hpp"

namespace b2vtest {

using blur2vid::Image;
using blur2vid::Rng;

// Smooth synthetic panorama: channels are sinusoid mixtures of the 3-D
// viewing direction, so the texture is seamless across the longitude
// wrap and continuous at the poles.
inline Image make_panorama(Eigen::Index height, std::uint64_t seed) {
  const Eigen::Index w = 2 * height;
  Image pano({height, w, 3});
  Rng rng(seed);
  double freq[3][3], phase[3];
  for (int c = 0; c < 3; ++c) {
    phase[c] = rng.uniform(0.0, 6.28);
    for (int i = 0; i < 3; ++i) freq[c][i] = rng.uniform(1.0, 5.0);
  }
  for (Eigen::Index y = 0; y < height; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const auto [theta, phi] = blur2vid::geom::equirect_to_sphere(
          static_cast<double>(x), static_cast<double>(y), w, height);
      const auto d = blur2vid::geom::direction_from_spherical(theta, phi);
      for (int c = 0; c < 3; ++c) {
        const double v =
            std::sin(freq[c][0] * d.x() + freq[c][1] * d.y() + freq[c][2] * d.z() + phase[c]);
        pano(y, x, c) = 0.5 + 0.35 * v;
      }
    }
  }
  return pano;
}

// Textured test image: low-frequency sinusoids plus mild noise.
inline Image make_natural_image(Eigen::Index h, Eigen::Index w, std::uint64_t seed) {
  Image img({h, w, 3});
  Rng rng(seed);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      for (Eigen::Index c = 0; c < 3; ++c) {
        const double v = 0.5 + 0.3 * std::sin(0.31 * x + 0.17 * y + 2.1 * c) +
                         0.1 * std::sin(0.05 * x * y / (1.0 + c));
        img(y, x, c) = std::clamp(v + 0.05 * (rng.uniform() - 0.5), 0.0, 1.0);
      }
  return img;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("b2v_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace b2vtest
