#pragma once

#include <cmath>
#include <vector>

#include "blur2vid/autodiff/autodiff.hpp"
#include "blur2vid/core/image.hpp"

namespace blur2vid::loss {

using ad::Variable;

// Every |.|_1 term below is reduced with a per-pixel mean rather than a
// sum so that w_l, lambda_tc and lambda_p stay resolution-independent.
struct LossWeights {
  std::vector<double> w;  // per level, coarse (l=1) to fine (l=k)
  double lambda_tc = 0.1;
  double lambda_p = 0.01;
  bool use_tcl = true;
  bool use_pt = true;
  bool include_itn_theta = false;

  // w_l = 1/2^(k-l): full scale carries unit weight, coarse scales less.
  static LossWeights defaults(int k) {
    LossWeights lw;
    lw.w.resize(static_cast<size_t>(k));
    for (int l = 1; l <= k; ++l)
      lw.w[static_cast<size_t>(l - 1)] = 1.0 / static_cast<double>(1 << (k - l));
    return lw;
  }

  void validate() const {
    if (w.empty() || w.back() <= 0.0)
      throw validation_error("LossWeights: full-scale weight must be positive");
    for (double v : w)
      if (v < 0.0) throw validation_error("LossWeights: negative level weight");
    if (lambda_tc < 0.0 || lambda_p < 0.0)
      throw validation_error("LossWeights: negative lambda");
  }
};

// Weighted multi-scale L1 between predicted images and the ground truth
// bilinearly downsampled to each scale. pred is [frame][scale], coarse
// to fine, with the full-scale entry last.
template <typename S>
Variable<S> multiscale_photometric(const std::vector<std::vector<Variable<S>>>& pred,
                                   const std::vector<Tensor<S>>& gt,
                                   const std::vector<double>& w) {
  if (pred.size() != gt.size() || pred.empty())
    throw validation_error("multiscale_photometric: frame count mismatch");
  std::vector<Variable<S>> terms;
  for (size_t j = 0; j < pred.size(); ++j) {
    if (pred[j].size() != w.size())
      throw validation_error("multiscale_photometric: scale count != weight count");
    for (size_t l = 0; l < pred[j].size(); ++l) {
      const auto& p = pred[j][l];
      Tensor<S> target = p.value().dim(0) == gt[j].dim(0) && p.value().dim(1) == gt[j].dim(1)
                             ? gt[j]
                             : bilinear_resize(gt[j], p.value().dim(0), p.value().dim(1));
      terms.push_back(ad::scale(ad::mean_abs_diff(p, target), static_cast<S>(w[l])));
    }
  }
  return ad::add_scalars(terms);
}

// Squared L2 between each frame's transform parameters at adjacent
// levels. thetas is [frame][level]; frames without transforms (the
// middle frame) hold empty vectors and are skipped.
template <typename S>
Variable<S> transformation_consistency(const std::vector<std::vector<Variable<S>>>& thetas) {
  std::vector<Variable<S>> terms;
  for (const auto& frame : thetas) {
    if (frame.empty()) continue;
    if (frame.size() < 2)
      throw validation_error("transformation_consistency: fewer than 2 levels");
    for (size_t l = 1; l < frame.size(); ++l)
      terms.push_back(ad::sum_sq_diff(frame[l], frame[l - 1]));
  }
  if (terms.empty()) throw validation_error("transformation_consistency: no transforms");
  return ad::add_scalars(terms);
}

// Negative mean absolute difference between each non-middle prediction
// and its time-symmetric ground-truth frame. Always <= 0; maximal (0)
// exactly when predictions replicate the mirrored GT, which is the
// degenerate behaviour the term penalizes.
template <typename S>
Variable<S> symmetric_penalty(const std::vector<Variable<S>>& pred_full,
                              const std::vector<Tensor<S>>& gt, int middle) {
  if (pred_full.size() != gt.size() || pred_full.empty())
    throw validation_error("symmetric_penalty: frame count mismatch");
  const size_t n = pred_full.size();
  std::vector<Variable<S>> terms;
  for (size_t j = 0; j < n; ++j) {
    if (static_cast<int>(j) == middle) continue;
    terms.push_back(ad::mean_abs_diff(pred_full[j], gt[n - 1 - j]));
  }
  return ad::scale(ad::add_scalars(terms), S(-1));
}

template <typename S>
struct LossBreakdown {
  Variable<S> total;
  Variable<S> mp;
  Variable<S> tc;
  Variable<S> p;
};

// L = L_mp + lambda_tc * L_tc + lambda_p * L_p with ablation flags that
// drop the extra terms entirely.
template <typename S>
LossBreakdown<S> total_loss(const std::vector<std::vector<Variable<S>>>& pred,
                            const std::vector<std::vector<Variable<S>>>& ftn_thetas,
                            const std::vector<std::vector<Variable<S>>>& itn_thetas,
                            const std::vector<Tensor<S>>& gt, int middle,
                            const LossWeights& weights) {
  weights.validate();
  LossBreakdown<S> out;
  out.mp = multiscale_photometric(pred, gt, weights.w);
  out.total = out.mp;

  const Variable<S> zero = Variable<S>::constant(Tensor<S>({1}));
  out.tc = zero;
  if (weights.use_tcl && weights.lambda_tc > 0.0) {
    if (weights.include_itn_theta && !itn_thetas.empty()) {
      std::vector<std::vector<Variable<S>>> merged = ftn_thetas;
      merged.insert(merged.end(), itn_thetas.begin(), itn_thetas.end());
      out.tc = transformation_consistency(merged);
    } else {
      out.tc = transformation_consistency(ftn_thetas);
    }
    out.total = ad::add(out.total, ad::scale(out.tc, static_cast<S>(weights.lambda_tc)));
  }

  out.p = zero;
  if (weights.use_pt && weights.lambda_p > 0.0) {
    std::vector<Variable<S>> full;
    for (const auto& frame : pred) full.push_back(frame.back());
    out.p = symmetric_penalty(full, gt, middle);
    out.total = ad::add(out.total, ad::scale(out.p, static_cast<S>(weights.lambda_p)));
  }
  return out;
}

}  // namespace blur2vid::loss
