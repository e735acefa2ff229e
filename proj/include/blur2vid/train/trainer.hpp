#pragma once

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "blur2vid/core/rng.hpp"
#include "blur2vid/network/checkpoint.hpp"
#include "blur2vid/network/model.hpp"
#include "blur2vid/objectives/losses.hpp"
#include "blur2vid/objectives/metrics.hpp"
#include "blur2vid/synth/dataset.hpp"

namespace blur2vid::trainer {

namespace fs = std::filesystem;
using nlohmann::json;
using nn::Model;
using nn::ParamContext;
using nn::TensorD;
using synth::BlurSample;
using synth::SampleSource;

struct TrainConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 80;
  std::vector<int> decay_epochs = {40, 60};  // lr halves at each
  int batch = 8;
  std::uint64_t seed = 1;
  int max_iters = 0;  // 0 = run all epochs
  int checkpoint_every = 0;  // epochs; 0 = only final
  int threads = 0;  // per-batch sample parallelism; 0 = hardware default
  double grad_clip = 0.0;  // 0 = off

  void validate() const {
    if (lr <= 0.0) throw validation_error("TrainConfig: lr must be > 0");
    if (batch < 1 || epochs < 1) throw validation_error("TrainConfig: bad batch/epochs");
    int prev = 0;
    for (int e : decay_epochs) {
      if (e <= prev || e > epochs)
        throw validation_error("TrainConfig: decay epochs must be strictly increasing in [1, epochs]");
      prev = e;
    }
  }
};

// Piecewise-constant schedule: the base rate halves at each decay epoch.
inline double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 1 || epoch > cfg.epochs)
    throw validation_error("lr_at: epoch out of range");
  double lr = cfg.lr;
  for (int e : cfg.decay_epochs)
    if (epoch >= e) lr *= 0.5;
  return lr;
}

struct IterationRecord {
  int iter = 0;
  int epoch = 0;
  double lr = 0;
  double l_mp = 0, l_tc = 0, l_p = 0, total = 0;
};

struct RunLog {
  std::vector<IterationRecord> iterations;
  std::vector<double> lr_trace;  // per epoch, 1-based epochs at index e-1
  std::uint64_t config_hash = 0;
  json config_echo;

  void write_csv(const fs::path& path) const {
    std::ofstream os(path);
    if (!os) throw validation_error("cannot write run log: " + path.string());
    os << "iter,epoch,lr,l_mp,l_tc,l_p,total\n";
    for (const auto& r : iterations)
      os << r.iter << "," << r.epoch << "," << r.lr << "," << r.l_mp << "," << r.l_tc << ","
         << r.l_p << "," << r.total << "\n";
  }
};

class Adam {
 public:
  Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(nn::ParamStore& params, const std::vector<TensorD>& grads, double lr) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = TensorD(params.value(static_cast<int>(i)).shape());
        v_[i] = TensorD(params.value(static_cast<int>(i)).shape());
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      if (grads[i].empty()) continue;
      auto& m = m_[i].array();
      auto& v = v_[i].array();
      const auto& g = grads[i].array();
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g.square();
      params.value(static_cast<int>(i)).array() -=
          lr * (m / bc1) / ((v / bc2).sqrt() + eps_);
    }
  }

 private:
  double beta1_, beta2_, eps_;
  std::vector<TensorD> m_, v_;
  long t_ = 0;
};

namespace detail {

struct SampleResult {
  std::vector<TensorD> grads;
  double l_mp = 0, l_tc = 0, l_p = 0, total = 0;
};

inline SampleResult train_step_sample(const Model& model, nn::ParamStore& params,
                                      const BlurSample& sample,
                                      const loss::LossWeights& weights) {
  SampleResult out;
  ParamContext ctx(params, true);
  const auto pred = model.forward(sample.blurred, ctx);
  const auto gt = synth::gt_frames_for(sample, model.config().frames);
  const auto breakdown =
      loss::total_loss(pred.supervision(), pred.theta_ftn, pred.theta_itn, gt, pred.middle,
                       weights);
  out.l_mp = breakdown.mp.item();
  out.l_tc = breakdown.tc.item();
  out.l_p = breakdown.p.item();
  out.total = breakdown.total.item();
  breakdown.total.backward();
  ctx.collect_grads(out.grads);
  return out;
}

}  // namespace detail

// One optimization stream; per-batch samples run on worker threads and
// their gradients are reduced in sample order, so a seed pins the loss
// trace bit-exactly regardless of thread count.
inline RunLog train(const SampleSource& data, Model& model, const TrainConfig& cfg,
                    const loss::LossWeights& weights, const fs::path& run_dir = {},
                    const std::function<void(const IterationRecord&)>& on_iteration = {}) {
  cfg.validate();
  weights.validate();
  if (data.size() == 0) throw validation_error("train: empty dataset");

  RunLog log;
  log.config_hash = model.config().hash();
  Adam adam(cfg.beta1, cfg.beta2, cfg.adam_eps);

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int n_threads = std::max(1, cfg.threads > 0 ? cfg.threads : (hw > 0 ? hw : 1));

  int iter = 0;
  bool stop = false;
  for (int epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    log.lr_trace.push_back(lr);

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(shuffle_rng.uniform_int(
                                  0, static_cast<int>(i) - 1))]);

    for (size_t start = 0; start < order.size() && !stop; start += static_cast<size_t>(cfg.batch)) {
      const size_t count = std::min(order.size() - start, static_cast<size_t>(cfg.batch));
      std::vector<detail::SampleResult> results(count);
      std::vector<BlurSample> batch(count);
      for (size_t i = 0; i < count; ++i) batch[i] = data.load(order[start + i]);

      if (n_threads == 1 || count == 1) {
        for (size_t i = 0; i < count; ++i)
          results[i] = detail::train_step_sample(model, model.params(), batch[i], weights);
      } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int t = 0; t < std::min<int>(n_threads, static_cast<int>(count)); ++t)
          pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
              results[i] = detail::train_step_sample(model, model.params(), batch[i], weights);
          });
        for (auto& th : pool) th.join();
      }

      // Ordered reduction keeps the update deterministic.
      std::vector<TensorD> grads(model.params().size());
      IterationRecord rec;
      for (size_t i = 0; i < count; ++i) {
        for (size_t p = 0; p < grads.size(); ++p) {
          if (results[i].grads[p].empty()) continue;
          if (grads[p].empty())
            grads[p] = results[i].grads[p];
          else
            grads[p].array() += results[i].grads[p].array();
        }
        rec.l_mp += results[i].l_mp;
        rec.l_tc += results[i].l_tc;
        rec.l_p += results[i].l_p;
        rec.total += results[i].total;
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (auto& g : grads)
        if (!g.empty()) g.array() *= inv;
      rec.l_mp *= inv;
      rec.l_tc *= inv;
      rec.l_p *= inv;
      rec.total *= inv;

      if (!std::isfinite(rec.total))
        throw numeric_error("non-finite loss at iteration " + std::to_string(iter + 1) +
                            " (epoch " + std::to_string(epoch) + ", batch starting at sample " +
                            std::to_string(start) + ")");

      if (cfg.grad_clip > 0.0) {
        double sq = 0.0;
        for (const auto& g : grads)
          if (!g.empty()) sq += g.array().square().sum();
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip) {
          const double s = cfg.grad_clip / norm;
          for (auto& g : grads)
            if (!g.empty()) g.array() *= s;
        }
      }

      adam.step(model.params(), grads, lr);

      rec.iter = ++iter;
      rec.epoch = epoch;
      rec.lr = lr;
      log.iterations.push_back(rec);
      if (on_iteration) on_iteration(rec);
      if (cfg.max_iters > 0 && iter >= cfg.max_iters) stop = true;
    }

    if (!run_dir.empty() && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "ckpt_epoch_%04d.b2v", epoch);
      nn::save_checkpoint((run_dir / buf).string(), model);
    }
  }

  if (!run_dir.empty()) {
    nn::save_checkpoint((run_dir / "final.b2v").string(), model);
    log.write_csv(run_dir / "runlog.csv");
  }
  return log;
}

// Produces n restored frames from one blurred observation. Tests inject
// oracles here; production wraps a trained model.
using Predictor = std::function<std::vector<Image>(const BlurSample&)>;

inline Predictor model_predictor(Model& model) {
  return [&model](const BlurSample& sample) {
    ParamContext ctx(model.params(), false);
    const auto pred = model.forward(sample.blurred, ctx);
    std::vector<Image> out = pred.refined_values();
    for (auto& f : out) f = clamp01(f);
    return out;
  };
}

struct RotationBin {
  double lo = 0, hi = 0;
  int count = 0;
  double mean_psnr_initial = 0, mean_psnr_middle = 0, mean_psnr_final = 0, mean_psnr_all = 0;
};

struct EvalOptions {
  bool bin_by_rotation = false;
  double bin_width_deg = 2.5;
  std::string train_label;
  std::string eval_label;
};

struct EvalResult {
  int n = 0;
  std::vector<metrics::MetricReport> per_sample;
  std::vector<double> rotation_magnitude;  // parallel to per_sample; <0 if n/a
  std::vector<double> mean_psnr;           // per frame position
  std::vector<double> mean_ssim;
  std::vector<RotationBin> bins;
  std::string train_label, eval_label;

  double mean_psnr_initial() const { return mean_psnr.front(); }
  double mean_psnr_middle() const { return mean_psnr[static_cast<size_t>((n - 1) / 2)]; }
  double mean_psnr_final() const { return mean_psnr.back(); }
  double mean_psnr_all() const {
    double s = 0;
    for (double v : mean_psnr) s += v;
    return s / static_cast<double>(mean_psnr.size());
  }

  void write_csv(const fs::path& path) const {
    std::ofstream os(path);
    if (!os) throw validation_error("cannot write eval csv: " + path.string());
    os << "sample,direction,rotation_deg";
    for (int i = 0; i < n; ++i) os << ",psnr_" << i;
    for (int i = 0; i < n; ++i) os << ",ssim_" << i;
    os << "\n";
    for (size_t s = 0; s < per_sample.size(); ++s) {
      os << s << "," << metrics::to_string(per_sample[s].direction) << ","
         << rotation_magnitude[s];
      for (double v : per_sample[s].psnr) os << "," << v;
      for (double v : per_sample[s].ssim) os << "," << v;
      os << "\n";
    }
  }

  json aggregate_json() const {
    json j;
    j["count"] = per_sample.size();
    j["frames"] = n;
    if (!train_label.empty() || !eval_label.empty())
      j["labels"] = {{"train", train_label}, {"eval", eval_label}};
    j["mean_psnr"] = {{"initial", mean_psnr_initial()},
                      {"middle", mean_psnr_middle()},
                      {"final", mean_psnr_final()},
                      {"all", mean_psnr_all()},
                      {"per_frame", mean_psnr}};
    const size_t mid = static_cast<size_t>((n - 1) / 2);
    double ssim_all = 0;
    for (double v : mean_ssim) ssim_all += v;
    j["mean_ssim"] = {{"initial", mean_ssim.front()},
                      {"middle", mean_ssim[mid]},
                      {"final", mean_ssim.back()},
                      {"all", ssim_all / static_cast<double>(mean_ssim.size())},
                      {"per_frame", mean_ssim}};
    return j;
  }

  void write_json(const fs::path& path) const {
    std::ofstream os(path);
    if (!os) throw validation_error("cannot write eval json: " + path.string());
    os << aggregate_json().dump(2) << "\n";
  }

  void write_curve_csv(const fs::path& path) const {
    std::ofstream os(path);
    if (!os) throw validation_error("cannot write curve csv: " + path.string());
    os << "rot_lo_deg,rot_hi_deg,count,psnr_initial,psnr_middle,psnr_final,psnr_all\n";
    for (const auto& b : bins)
      os << b.lo << "," << b.hi << "," << b.count << "," << b.mean_psnr_initial << ","
         << b.mean_psnr_middle << "," << b.mean_psnr_final << "," << b.mean_psnr_all << "\n";
  }
};

// Order-invariant per-sample scoring aggregated per frame position;
// optionally bins panorama samples by rotation magnitude for the
// PSNR-vs-blur-size curve.
inline EvalResult evaluate(const SampleSource& data, const Predictor& predictor, int n_pred,
                           const EvalOptions& opts = {}) {
  if (data.size() == 0) throw validation_error("evaluate: empty dataset");
  EvalResult result;
  result.n = n_pred;
  result.train_label = opts.train_label;
  result.eval_label = opts.eval_label;
  result.mean_psnr.assign(static_cast<size_t>(n_pred), 0.0);
  result.mean_ssim.assign(static_cast<size_t>(n_pred), 0.0);

  for (size_t s = 0; s < data.size(); ++s) {
    const BlurSample sample = data.load(s);
    const auto gt = synth::gt_frames_for(sample, n_pred);
    std::vector<Image> pred = predictor(sample);
    if (static_cast<int>(pred.size()) != n_pred)
      throw validation_error("evaluate: predictor returned " + std::to_string(pred.size()) +
                             " frames, expected " + std::to_string(n_pred));
    auto report = metrics::order_invariant_eval(pred, gt);
    for (int i = 0; i < n_pred; ++i) {
      result.mean_psnr[static_cast<size_t>(i)] += report.psnr[static_cast<size_t>(i)];
      result.mean_ssim[static_cast<size_t>(i)] += report.ssim[static_cast<size_t>(i)];
    }
    result.per_sample.push_back(std::move(report));
    result.rotation_magnitude.push_back(
        sample.mode == synth::SynthMode::rotational ? sample.rotation.magnitude() : -1.0);
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  for (auto& v : result.mean_psnr) v *= inv;
  for (auto& v : result.mean_ssim) v *= inv;

  if (opts.bin_by_rotation) {
    double max_mag = 0;
    for (double m : result.rotation_magnitude) max_mag = std::max(max_mag, m);
    const int n_bins =
        std::max(1, static_cast<int>(std::ceil((max_mag + 1e-12) / opts.bin_width_deg)));
    result.bins.resize(static_cast<size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) {
      result.bins[static_cast<size_t>(b)].lo = b * opts.bin_width_deg;
      result.bins[static_cast<size_t>(b)].hi = (b + 1) * opts.bin_width_deg;
    }
    const size_t mid = static_cast<size_t>((n_pred - 1) / 2);
    for (size_t s = 0; s < result.per_sample.size(); ++s) {
      const double m = result.rotation_magnitude[s];
      if (m < 0) continue;
      int b = static_cast<int>(m / opts.bin_width_deg);
      b = std::min(b, n_bins - 1);
      auto& bin = result.bins[static_cast<size_t>(b)];
      ++bin.count;
      bin.mean_psnr_initial += result.per_sample[s].psnr.front();
      bin.mean_psnr_middle += result.per_sample[s].psnr[mid];
      bin.mean_psnr_final += result.per_sample[s].psnr.back();
      bin.mean_psnr_all += result.per_sample[s].mean_psnr();
    }
    for (auto& bin : result.bins) {
      if (bin.count == 0) continue;
      bin.mean_psnr_initial /= bin.count;
      bin.mean_psnr_middle /= bin.count;
      bin.mean_psnr_final /= bin.count;
      bin.mean_psnr_all /= bin.count;
    }
  }
  return result;
}

// Same protocol as evaluate; the report is labeled with the source and
// target dataset identities.
inline EvalResult cross_evaluate(const SampleSource& data, const Predictor& predictor,
                                 int n_pred, const std::string& train_label,
                                 const std::string& eval_label,
                                 const EvalOptions& base_opts = {}) {
  EvalOptions opts = base_opts;
  opts.train_label = train_label;
  opts.eval_label = eval_label;
  return evaluate(data, predictor, n_pred, opts);
}

}  // namespace blur2vid::trainer
