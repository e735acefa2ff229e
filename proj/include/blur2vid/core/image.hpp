#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "blur2vid/core/error.hpp"
#include "blur2vid/core/rng.hpp"
#include "blur2vid/core/tensor.hpp"

namespace blur2vid {

// Images are (H, W, C) tensors with values in [0, 1]. Quantization to
// 8-bit happens only at PNG I/O.
using Image = Tensor<double>;

template <typename S>
void check_image(const Tensor<S>& img, const char* what) {
  if (img.rank() != 3) throw validation_error(std::string(what) + ": expected rank-3 (H,W,C) image");
  if (img.dim(0) < 1 || img.dim(1) < 1 || img.dim(2) < 1)
    throw validation_error(std::string(what) + ": empty image");
}

// Bilinear resize with half-pixel sample centers and border clamping.
// Resizing to the same size returns the input values unchanged.
template <typename S>
Tensor<S> bilinear_resize(const Tensor<S>& img, Eigen::Index out_h, Eigen::Index out_w) {
  check_image(img, "bilinear_resize");
  const Eigen::Index h = img.dim(0), w = img.dim(1), c = img.dim(2);
  if (out_h < 1 || out_w < 1) throw validation_error("bilinear_resize: bad target size");
  Tensor<S> out({out_h, out_w, c});
  const S sy = static_cast<S>(h) / static_cast<S>(out_h);
  const S sx = static_cast<S>(w) / static_cast<S>(out_w);
  for (Eigen::Index oy = 0; oy < out_h; ++oy) {
    S fy = (static_cast<S>(oy) + S(0.5)) * sy - S(0.5);
    fy = std::min(std::max(fy, S(0)), static_cast<S>(h - 1));
    const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(fy));
    const Eigen::Index y1 = std::min(y0 + 1, h - 1);
    const S wy = fy - static_cast<S>(y0);
    for (Eigen::Index ox = 0; ox < out_w; ++ox) {
      S fx = (static_cast<S>(ox) + S(0.5)) * sx - S(0.5);
      fx = std::min(std::max(fx, S(0)), static_cast<S>(w - 1));
      const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(fx));
      const Eigen::Index x1 = std::min(x0 + 1, w - 1);
      const S wx = fx - static_cast<S>(x0);
      for (Eigen::Index ch = 0; ch < c; ++ch) {
        const S top = (S(1) - wx) * img(y0, x0, ch) + wx * img(y0, x1, ch);
        const S bot = (S(1) - wx) * img(y1, x0, ch) + wx * img(y1, x1, ch);
        out(oy, ox, ch) = (S(1) - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

template <typename S>
Tensor<S> clamp01(const Tensor<S>& img) {
  Tensor<S> out = img;
  out.array() = out.array().min(S(1)).max(S(0));
  return out;
}

// Per-pixel arithmetic mean of equally sized images.
template <typename S>
Tensor<S> average_images(const std::vector<Tensor<S>>& imgs) {
  if (imgs.empty()) throw validation_error("average_images: empty list");
  Tensor<S> acc = imgs[0];
  for (size_t i = 1; i < imgs.size(); ++i) {
    if (!imgs[i].same_shape(acc)) throw validation_error("average_images: shape mismatch");
    acc.array() += imgs[i].array();
  }
  acc.array() /= static_cast<S>(imgs.size());
  return acc;
}

// Horizontal concatenation with a separator strip; used for contact sheets.
template <typename S>
Tensor<S> hstack(const std::vector<Tensor<S>>& imgs, Eigen::Index sep = 2, S sep_value = S(1)) {
  if (imgs.empty()) throw validation_error("hstack: empty list");
  const Eigen::Index h = imgs[0].dim(0), c = imgs[0].dim(2);
  Eigen::Index total_w = 0;
  for (const auto& im : imgs) {
    if (im.dim(0) != h || im.dim(2) != c) throw validation_error("hstack: incompatible images");
    total_w += im.dim(1);
  }
  total_w += sep * static_cast<Eigen::Index>(imgs.size() - 1);
  Tensor<S> out = Tensor<S>::constant({h, total_w, c}, sep_value);
  Eigen::Index x_off = 0;
  for (const auto& im : imgs) {
    for (Eigen::Index y = 0; y < h; ++y)
      for (Eigen::Index x = 0; x < im.dim(1); ++x)
        for (Eigen::Index ch = 0; ch < c; ++ch) out(y, x_off + x, ch) = im(y, x, ch);
    x_off += im.dim(1) + sep;
  }
  return out;
}

template <typename S>
Tensor<S> random_tensor(Shape shape, Rng& rng, S lo = S(0), S hi = S(1)) {
  Tensor<S> t(std::move(shape));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.at(i) = static_cast<S>(rng.uniform(lo, hi));
  return t;
}

}  // namespace blur2vid
