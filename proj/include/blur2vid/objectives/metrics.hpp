#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "blur2vid/core/error.hpp"
#include "blur2vid/core/image.hpp"

namespace blur2vid::metrics {

// Peak signal-to-noise ratio in dB over [0,1] images, capped at 100 dB
// for near-zero MSE so reports stay finite.
template <typename S>
S psnr(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b)) throw validation_error("psnr: shape mismatch");
  const S mse = (a.array() - b.array()).square().mean();
  if (mse < S(1e-10)) return S(100);
  return S(-10) * std::log10(mse);
}

namespace detail {

inline Eigen::VectorXd gaussian_kernel(int size, double sigma) {
  Eigen::VectorXd k(size);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) k[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
  return k / k.sum();
}

// Separable 'valid' filtering: output is (H-size+1, W-size+1).
inline Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& m, const Eigen::VectorXd& k) {
  const int size = static_cast<int>(k.size());
  Eigen::MatrixXd horiz(m.rows(), m.cols() - size + 1);
  for (Eigen::Index y = 0; y < m.rows(); ++y)
    for (Eigen::Index x = 0; x < horiz.cols(); ++x)
      horiz(y, x) = m.row(y).segment(x, size).dot(k);
  Eigen::MatrixXd out(m.rows() - size + 1, horiz.cols());
  for (Eigen::Index y = 0; y < out.rows(); ++y)
    for (Eigen::Index x = 0; x < out.cols(); ++x)
      out(y, x) = horiz.col(x).segment(y, size).dot(k);
  return out;
}

}  // namespace detail

// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range 1. Windows are 'valid' (no padding); the result
// is averaged over window positions and channels.
template <typename S>
S ssim(const Tensor<S>& a, const Tensor<S>& b, int window = 11, double sigma = 1.5) {
  if (!a.same_shape(b)) throw validation_error("ssim: shape mismatch");
  check_image(a, "ssim");
  const Eigen::Index h = a.dim(0), w = a.dim(1), c = a.dim(2);
  if (h < window || w < window)
    throw validation_error("ssim: image smaller than the " + std::to_string(window) +
                           "x" + std::to_string(window) + " window");
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  const Eigen::VectorXd k = detail::gaussian_kernel(window, sigma);

  double total = 0.0;
  for (Eigen::Index ch = 0; ch < c; ++ch) {
    Eigen::MatrixXd x(h, w), y(h, w);
    for (Eigen::Index i = 0; i < h; ++i)
      for (Eigen::Index j = 0; j < w; ++j) {
        x(i, j) = static_cast<double>(a(i, j, ch));
        y(i, j) = static_cast<double>(b(i, j, ch));
      }
    const Eigen::MatrixXd mu_x = detail::filter_valid(x, k);
    const Eigen::MatrixXd mu_y = detail::filter_valid(y, k);
    const Eigen::MatrixXd xx = detail::filter_valid(x.cwiseProduct(x), k);
    const Eigen::MatrixXd yy = detail::filter_valid(y.cwiseProduct(y), k);
    const Eigen::MatrixXd xy = detail::filter_valid(x.cwiseProduct(y), k);
    const Eigen::ArrayXXd var_x = xx.array() - mu_x.array().square();
    const Eigen::ArrayXXd var_y = yy.array() - mu_y.array().square();
    const Eigen::ArrayXXd cov = xy.array() - (mu_x.array() * mu_y.array());
    const Eigen::ArrayXXd num =
        (2.0 * mu_x.array() * mu_y.array() + c1) * (2.0 * cov + c2);
    const Eigen::ArrayXXd den =
        (mu_x.array().square() + mu_y.array().square() + c1) * (var_x + var_y + c2);
    total += (num / den).mean();
  }
  return static_cast<S>(total / static_cast<double>(c));
}

enum class Direction { forward, reverse };

inline std::string to_string(Direction d) { return d == Direction::forward ? "forward" : "reverse"; }

// Per-frame scores for one prediction, aligned to the GT direction that
// scored the higher mean PSNR.
struct MetricReport {
  Direction direction = Direction::forward;
  std::vector<double> psnr;  // indexed by prediction position
  std::vector<double> ssim;
  int n = 0;
  int middle = 0;

  double mean_psnr() const {
    double s = 0;
    for (double v : psnr) s += v;
    return psnr.empty() ? 0 : s / static_cast<double>(psnr.size());
  }
  double mean_ssim() const {
    double s = 0;
    for (double v : ssim) s += v;
    return ssim.empty() ? 0 : s / static_cast<double>(ssim.size());
  }
  double psnr_initial() const { return psnr.front(); }
  double psnr_middle() const { return psnr[static_cast<size_t>(middle)]; }
  double psnr_final() const { return psnr.back(); }
  double ssim_initial() const { return ssim.front(); }
  double ssim_middle() const { return ssim[static_cast<size_t>(middle)]; }
  double ssim_final() const { return ssim.back(); }
};

// A blurred image is invariant to temporal reversal, so predictions are
// scored against both the GT order and its reverse; the direction with
// the higher mean PSNR is reported for both metrics.
inline MetricReport order_invariant_eval(const std::vector<Image>& pred,
                                         const std::vector<Image>& gt) {
  if (pred.size() != gt.size() || pred.empty())
    throw validation_error("order_invariant_eval: sequence length mismatch");
  const size_t n = pred.size();
  std::vector<double> fwd(n), rev(n);
  double fwd_mean = 0, rev_mean = 0;
  for (size_t i = 0; i < n; ++i) {
    fwd[i] = psnr(pred[i], gt[i]);
    rev[i] = psnr(pred[i], gt[n - 1 - i]);
    fwd_mean += fwd[i];
    rev_mean += rev[i];
  }
  MetricReport report;
  report.n = static_cast<int>(n);
  report.middle = static_cast<int>((n - 1) / 2);
  report.direction = rev_mean > fwd_mean ? Direction::reverse : Direction::forward;
  report.psnr = report.direction == Direction::forward ? fwd : rev;
  report.ssim.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const Image& target = report.direction == Direction::forward ? gt[i] : gt[n - 1 - i];
    report.ssim[i] = ssim(pred[i], target);
  }
  return report;
}

}  // namespace blur2vid::metrics
