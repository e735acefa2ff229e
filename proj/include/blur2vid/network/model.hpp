#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blur2vid/autodiff/autodiff.hpp"
#include "blur2vid/autodiff/nn_ops.hpp"
#include "blur2vid/core/image.hpp"
#include "blur2vid/core/rng.hpp"
#include "blur2vid/util/hash.hpp"
#include "blur2vid/warp/warp.hpp"

namespace blur2vid::nn {

using TensorD = Tensor<double>;
using Var = ad::Variable<double>;
using nlohmann::json;

struct NetworkConfig {
  int levels = 5;       // encoder blocks; features halve per level
  int frames = 3;       // predicted frames, odd
  double width_mult = 1.0;
  bool use_lw = true;       // local-warp branch of the feature transformer
  bool use_itn = true;      // image transformer on middle predictions
  bool use_refiner = true;  // residual refining block on full-scale frames
  bool share_nonmiddle = false;  // experimental: one decoder for all non-middle frames
  double lrelu_slope = 0.1;
  std::uint64_t init_seed = 1;

  void validate() const {
    if (levels < 2) throw validation_error("NetworkConfig: levels must be >= 2");
    if (frames < 3 || frames % 2 == 0)
      throw validation_error("NetworkConfig: frames must be odd and >= 3");
    if (width_mult <= 0.0) throw validation_error("NetworkConfig: width_mult must be > 0");
  }

  int middle() const { return (frames - 1) / 2; }

  // Base widths 32,64,...,capped at 256, scaled by width_mult (floor 4).
  std::vector<Eigen::Index> channels() const {
    std::vector<Eigen::Index> c(static_cast<size_t>(levels));
    for (int l = 0; l < levels; ++l) {
      const double base = std::min(256.0, 32.0 * std::pow(2.0, l));
      c[static_cast<size_t>(l)] =
          std::max<Eigen::Index>(4, static_cast<Eigen::Index>(std::lround(base * width_mult)));
    }
    return c;
  }

  json to_json() const {
    return json{{"levels", levels},
                {"frames", frames},
                {"width_mult", width_mult},
                {"use_lw", use_lw},
                {"use_itn", use_itn},
                {"use_refiner", use_refiner},
                {"share_nonmiddle", share_nonmiddle},
                {"lrelu_slope", lrelu_slope},
                {"init_seed", init_seed}};
  }

  static NetworkConfig from_json(const json& j) {
    NetworkConfig c;
    c.levels = j.at("levels").get<int>();
    c.frames = j.at("frames").get<int>();
    c.width_mult = j.at("width_mult").get<double>();
    c.use_lw = j.at("use_lw").get<bool>();
    c.use_itn = j.at("use_itn").get<bool>();
    c.use_refiner = j.at("use_refiner").get<bool>();
    c.share_nonmiddle = j.at("share_nonmiddle").get<bool>();
    c.lrelu_slope = j.at("lrelu_slope").get<double>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
  }

  std::uint64_t hash() const { return fnv1a(to_json().dump()); }

  bool operator==(const NetworkConfig& o) const { return to_json() == o.to_json(); }
};

// Named parameter tensors in fixed creation order.
class ParamStore {
 public:
  int add(std::string name, TensorD value) {
    if (index_.count(name)) throw validation_error("duplicate parameter: " + name);
    const int idx = static_cast<int>(values_.size());
    index_[name] = idx;
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return idx;
  }

  size_t size() const { return values_.size(); }
  const std::string& name(int idx) const { return names_[static_cast<size_t>(idx)]; }
  TensorD& value(int idx) { return values_[static_cast<size_t>(idx)]; }
  const TensorD& value(int idx) const { return values_[static_cast<size_t>(idx)]; }

  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }

  Eigen::Index total_size() const {
    Eigen::Index n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
  }

 private:
  std::vector<std::string> names_;
  std::vector<TensorD> values_;
  std::unordered_map<std::string, int> index_;
};

// Per-forward-pass view of the parameters. Each parameter enters the
// graph as one leaf per context, so concurrent forward passes over the
// same store never share gradient state.
class ParamContext {
 public:
  ParamContext(ParamStore& store, bool train) : store_(&store), train_(train) {}

  Var get(int idx) {
    auto it = leaves_.find(idx);
    if (it != leaves_.end()) return it->second;
    Var leaf = Var::leaf(store_->value(idx), train_);
    leaves_.emplace(idx, leaf);
    return leaf;
  }

  bool training() const { return train_; }

  // Adds each leaf's gradient into grads (indexed like the store).
  void collect_grads(std::vector<TensorD>& grads) const {
    grads.resize(store_->size());
    for (const auto& [idx, leaf] : leaves_) {
      if (!leaf.has_grad()) continue;
      auto& slot = grads[static_cast<size_t>(idx)];
      if (slot.empty())
        slot = leaf.grad();
      else
        slot.array() += leaf.grad().array();
    }
  }

 private:
  ParamStore* store_;
  bool train_;
  std::unordered_map<int, Var> leaves_;
};

struct ConvSpec {
  int w = -1, b = -1;
  int stride = 1, pad = 1;
};
struct DeconvSpec {
  int w = -1, b = -1;
};
struct LinearSpec {
  int w = -1, b = -1;
};
struct DenseBlockSpec {
  std::vector<ConvSpec> convs;  // dense connections; last conv sets the output width
};
struct DecoderStageSpec {
  DeconvSpec up;
  DenseBlockSpec dense;
  ConvSpec img;
};
struct RefinerSpec {
  ConvSpec c1, c2, c3;
};
struct DecoderSpec {
  std::vector<DecoderStageSpec> stages;
  RefinerSpec refiner;
};
struct StnSpec {
  ConvSpec c1, c2;
  LinearSpec fc;
};
struct LwSpec {
  ConvSpec c1, c2, c3;
};

struct FtnResult {
  Var transformed;
  Var theta;
  Var flow;  // undefined when the LW branch is disabled
};
struct ItnResult {
  Var image;
  Var theta;
};

// Frames restored from one blurred input: images at every decoder scale,
// the refined full-scale frames, and the transform parameters consumed
// by the consistency loss. The middle frame carries no transforms.
struct SequencePrediction {
  int n = 0, k = 0, middle = 0;
  std::vector<std::vector<Var>> scales;     // [frame][scale], coarse to fine (raw heads)
  std::vector<Var> refined;                 // [frame] full scale
  std::vector<std::vector<Var>> theta_ftn;  // [frame][level]
  std::vector<std::vector<Var>> theta_itn;  // [frame][stage]
  std::vector<std::vector<Var>> flows;      // [frame][level]
  std::vector<std::vector<TensorD>> itn_images;  // populated when recording internals

  // Images entering the photometric loss: every scale, with the refined
  // frame standing in for the raw full-scale head.
  std::vector<std::vector<Var>> supervision() const {
    std::vector<std::vector<Var>> out(scales.size());
    for (size_t j = 0; j < scales.size(); ++j) {
      out[j] = scales[j];
      out[j].back() = refined[j];
    }
    return out;
  }

  std::vector<Image> refined_values() const {
    std::vector<Image> out;
    out.reserve(refined.size());
    for (const auto& r : refined) out.push_back(r.value());
    return out;
  }
};

// Restoration network: shared encoder, middle-frame decoder, per-frame
// feature/image transformers and non-middle decoders, plus residual
// refiners. All parameters live in a flat named store.
class Model {
 public:
  explicit Model(NetworkConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(cfg_.init_seed);
    build(rng);
  }

  const NetworkConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // ---- spec operations ----

  std::vector<Var> encode(ParamContext& ctx, const Var& input) const {
    const Eigen::Index h = input.value().dim(0), w = input.value().dim(1);
    const Eigen::Index mult = Eigen::Index(1) << cfg_.levels;
    if (h % mult != 0 || w % mult != 0)
      throw validation_error("encode: input dims " + std::to_string(h) + "x" +
                             std::to_string(w) + " must be divisible by " +
                             std::to_string(mult));
    std::vector<Var> pyr;
    Var x = input;
    for (int l = 0; l < cfg_.levels; ++l) {
      x = ad::leaky_relu(run_conv(ctx, enc_[static_cast<size_t>(l)].first, x), cfg_.lrelu_slope);
      x = ad::leaky_relu(run_conv(ctx, enc_[static_cast<size_t>(l)].second, x), cfg_.lrelu_slope);
      pyr.push_back(x);
    }
    return pyr;
  }

  // Returns the k decoded middle images (coarse to fine) and the final
  // decoder feature used by the refiner.
  std::pair<std::vector<Var>, Var> decode_middle(ParamContext& ctx, const std::vector<Var>& pyr,
                                                 const Var& input) const {
    const int k = cfg_.levels;
    return run_decoder(ctx, dec_middle_, pyr.back(), [&](int si) {
      std::vector<Var> extra;
      if (si < k - 1)
        extra.push_back(pyr[static_cast<size_t>(k - 2 - si)]);
      else
        extra.push_back(input);
      return extra;
    });
  }

  // Feature transformer: globally STN-warped feature, concatenated with
  // the locally warped feature when the LW branch is enabled.
  FtnResult ftn(ParamContext& ctx, const Var& feat, int frame, int level) const {
    check_nonmiddle(frame);
    FtnResult out;
    out.theta = run_stn_regressor(ctx, ftn_stn_.at(key(frame, level)), feat);
    Var stn_feat = warp::affine_grid_sample(feat, out.theta);
    if (cfg_.use_lw) {
      out.flow = run_lw_regressor(ctx, ftn_lw_.at(key(frame, level)), feat);
      out.transformed = ad::concat_channels<double>({stn_feat, warp::local_warp(feat, out.flow)});
    } else {
      out.transformed = stn_feat;
    }
    return out;
  }

  // Image transformer: STN applied to the predicted middle image at one
  // scale, regressed from that image.
  ItnResult itn(ParamContext& ctx, const Var& middle_img, int frame, int stage) const {
    check_nonmiddle(frame);
    if (!cfg_.use_itn) throw validation_error("itn: disabled by config");
    ItnResult out;
    out.theta = run_stn_regressor(ctx, itn_.at(key(frame, stage)), middle_img);
    out.image = warp::affine_grid_sample(middle_img, out.theta);
    return out;
  }

  std::pair<std::vector<Var>, Var> decode_nonmiddle(ParamContext& ctx,
                                                    const std::vector<Var>& u_t,
                                                    const std::vector<Var>& i_t,
                                                    const std::vector<Var>& pyr,
                                                    const Var& input, int frame) const {
    check_nonmiddle(frame);
    const int k = cfg_.levels;
    const DecoderSpec& dec = nonmiddle_decoder(frame);
    return run_decoder(ctx, dec, u_t.back(), [&](int si) {
      std::vector<Var> extra;
      if (si < k - 1) {
        extra.push_back(u_t[static_cast<size_t>(k - 2 - si)]);
        if (cfg_.use_itn) extra.push_back(i_t[static_cast<size_t>(si)]);
        extra.push_back(pyr[static_cast<size_t>(k - 2 - si)]);
      } else {
        if (cfg_.use_itn) extra.push_back(i_t[static_cast<size_t>(si)]);
        extra.push_back(input);
      }
      return extra;
    });
  }

  // Residual refinement of a full-scale frame; pass-through when the
  // refiner is disabled.
  Var refine(ParamContext& ctx, const Var& image, const Var& last_feature, int frame) const {
    if (!cfg_.use_refiner) return image;
    const RefinerSpec& spec =
        frame == cfg_.middle() ? dec_middle_.refiner : nonmiddle_decoder(frame).refiner;
    Var h = ad::concat_channels<double>({image, last_feature});
    h = ad::leaky_relu(run_conv(ctx, spec.c1, h), cfg_.lrelu_slope);
    h = ad::leaky_relu(run_conv(ctx, spec.c2, h), cfg_.lrelu_slope);
    return ad::add(image, run_conv(ctx, spec.c3, h));
  }

  SequencePrediction forward(const TensorD& blurred, ParamContext& ctx,
                             bool record_internals = false) const {
    const int k = cfg_.levels;
    const int n = cfg_.frames;
    const int mid = cfg_.middle();

    Var input = Var::constant(blurred);
    const std::vector<Var> pyr = encode(ctx, input);

    SequencePrediction out;
    out.n = n;
    out.k = k;
    out.middle = mid;
    out.scales.resize(static_cast<size_t>(n));
    out.refined.resize(static_cast<size_t>(n));
    out.theta_ftn.resize(static_cast<size_t>(n));
    out.theta_itn.resize(static_cast<size_t>(n));
    out.flows.resize(static_cast<size_t>(n));
    if (record_internals) out.itn_images.resize(static_cast<size_t>(n));

    auto [mid_imgs, mid_last] = decode_middle(ctx, pyr, input);
    out.scales[static_cast<size_t>(mid)] = mid_imgs;
    out.refined[static_cast<size_t>(mid)] = refine(ctx, mid_imgs.back(), mid_last, mid);

    for (int j = 0; j < n; ++j) {
      if (j == mid) continue;
      std::vector<Var> u_t(static_cast<size_t>(k));
      for (int l = 0; l < k; ++l) {
        FtnResult f = ftn(ctx, pyr[static_cast<size_t>(l)], j, l);
        u_t[static_cast<size_t>(l)] = f.transformed;
        out.theta_ftn[static_cast<size_t>(j)].push_back(f.theta);
        if (cfg_.use_lw) out.flows[static_cast<size_t>(j)].push_back(f.flow);
      }
      std::vector<Var> i_t(static_cast<size_t>(k));
      if (cfg_.use_itn) {
        for (int si = 0; si < k; ++si) {
          ItnResult r = itn(ctx, mid_imgs[static_cast<size_t>(si)], j, si);
          i_t[static_cast<size_t>(si)] = r.image;
          out.theta_itn[static_cast<size_t>(j)].push_back(r.theta);
          if (record_internals)
            out.itn_images[static_cast<size_t>(j)].push_back(r.image.value());
        }
      }
      auto [imgs, last] = decode_nonmiddle(ctx, u_t, i_t, pyr, input, j);
      out.scales[static_cast<size_t>(j)] = imgs;
      out.refined[static_cast<size_t>(j)] = refine(ctx, imgs.back(), last, j);
    }
    return out;
  }

  // Convenience inference entry point.
  SequencePrediction predict(const TensorD& blurred) {
    ParamContext ctx(params_, false);
    return forward(blurred, ctx, false);
  }

 private:
  static int key(int frame, int level) { return frame * 64 + level; }

  void check_nonmiddle(int frame) const {
    if (frame == cfg_.middle() || frame < 0 || frame >= cfg_.frames)
      throw validation_error("transformer ops only exist for non-middle frames");
  }

  const DecoderSpec& nonmiddle_decoder(int frame) const {
    return cfg_.share_nonmiddle ? dec_shared_ : dec_frames_.at(frame);
  }

  // ---- construction ----

  TensorD kaiming_uniform(Shape shape, Eigen::Index fan_in, Rng& rng) const {
    const double gain = std::sqrt(2.0 / (1.0 + cfg_.lrelu_slope * cfg_.lrelu_slope));
    const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
    TensorD t(std::move(shape));
    for (Eigen::Index i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(-bound, bound);
    return t;
  }

  ConvSpec make_conv(const std::string& name, Eigen::Index cin, Eigen::Index cout, Rng& rng,
                     int stride = 1, int k = 3, bool zero_init = false) {
    ConvSpec spec;
    spec.stride = stride;
    spec.pad = (k - 1) / 2;
    Shape wshape{k, k, cin, cout};
    spec.w = params_.add(name + ".w", zero_init ? TensorD(wshape)
                                                : kaiming_uniform(wshape, k * k * cin, rng));
    spec.b = params_.add(name + ".b", TensorD({cout}));
    return spec;
  }

  DeconvSpec make_deconv(const std::string& name, Eigen::Index cin, Eigen::Index cout, Rng& rng) {
    DeconvSpec spec;
    spec.w = params_.add(name + ".w", kaiming_uniform({cin, 4, 4, cout}, cin * 16, rng));
    spec.b = params_.add(name + ".b", TensorD({cout}));
    return spec;
  }

  LinearSpec make_identity_head(const std::string& name, Eigen::Index cin) {
    LinearSpec spec;
    spec.w = params_.add(name + ".w", TensorD({cin, 6}));
    spec.b = params_.add(name + ".b", warp::identity_affine<double>());
    return spec;
  }

  DenseBlockSpec make_dense(const std::string& name, Eigen::Index cin, Eigen::Index cout,
                            Rng& rng) {
    DenseBlockSpec spec;
    const Eigen::Index growth = std::max<Eigen::Index>(4, cout / 2);
    Eigen::Index c = cin;
    for (int i = 0; i < 4; ++i) {
      spec.convs.push_back(make_conv(name + ".d" + std::to_string(i), c, growth, rng));
      c += growth;
    }
    spec.convs.push_back(make_conv(name + ".d4", c, cout, rng));
    return spec;
  }

  // Output width of decoder stage si: mirrors the encoder width at the
  // same resolution, finest stage reuses the level-1 width.
  Eigen::Index stage_width(int si) const {
    const auto c = cfg_.channels();
    return si < cfg_.levels - 1 ? c[static_cast<size_t>(cfg_.levels - 2 - si)] : c[0];
  }

  Eigen::Index ftn_channels(Eigen::Index c) const { return cfg_.use_lw ? 2 * c : c; }

  DecoderSpec make_decoder(const std::string& prefix, bool nonmiddle, Rng& rng) {
    const int k = cfg_.levels;
    const auto c = cfg_.channels();
    DecoderSpec dec;
    for (int si = 0; si < k; ++si) {
      const Eigen::Index width = stage_width(si);
      const Eigen::Index deconv_in =
          si == 0 ? (nonmiddle ? ftn_channels(c.back()) : c.back()) : stage_width(si - 1);
      DecoderStageSpec stage;
      const std::string sname = prefix + ".s" + std::to_string(si);
      stage.up = make_deconv(sname + ".up", deconv_in, width, rng);
      Eigen::Index concat_in = width + (si > 0 ? 3 : 0);
      if (si < k - 1) {
        concat_in += c[static_cast<size_t>(k - 2 - si)];
        if (nonmiddle) concat_in += ftn_channels(c[static_cast<size_t>(k - 2 - si)]);
      } else {
        concat_in += 3;  // blurred input at full scale
      }
      if (nonmiddle && cfg_.use_itn) concat_in += 3;
      stage.dense = make_dense(sname + ".dense", concat_in, width, rng);
      stage.img = make_conv(sname + ".img", width, 3, rng);
      dec.stages.push_back(std::move(stage));
    }
    if (cfg_.use_refiner) {
      const Eigen::Index rw = std::max<Eigen::Index>(8, c[0]);
      dec.refiner.c1 = make_conv(prefix + ".refine.c1", 3 + stage_width(k - 1), rw, rng);
      dec.refiner.c2 = make_conv(prefix + ".refine.c2", rw, rw, rng);
      dec.refiner.c3 = make_conv(prefix + ".refine.c3", rw, 3, rng, 1, 3, /*zero_init=*/true);
    }
    return dec;
  }

  StnSpec make_stn(const std::string& prefix, Eigen::Index cin, Rng& rng) {
    StnSpec spec;
    const Eigen::Index hidden = std::max<Eigen::Index>(8, cin / 2);
    spec.c1 = make_conv(prefix + ".c1", cin, hidden, rng, 2);
    spec.c2 = make_conv(prefix + ".c2", hidden, hidden, rng, 2);
    spec.fc = make_identity_head(prefix + ".fc", hidden);
    return spec;
  }

  LwSpec make_lw(const std::string& prefix, Eigen::Index cin, Rng& rng) {
    LwSpec spec;
    spec.c1 = make_conv(prefix + ".c1", cin, cin, rng);
    spec.c2 = make_conv(prefix + ".c2", cin, cin, rng);
    spec.c3 = make_conv(prefix + ".c3", cin, 2, rng, 1, 3, /*zero_init=*/true);
    return spec;
  }

  void build(Rng& rng) {
    const int k = cfg_.levels;
    const int n = cfg_.frames;
    const auto c = cfg_.channels();

    Eigen::Index cin = 3;
    for (int l = 0; l < k; ++l) {
      const std::string name = "enc.l" + std::to_string(l);
      auto c1 = make_conv(name + ".c1", cin, c[static_cast<size_t>(l)], rng, 2);
      auto c2 = make_conv(name + ".c2", c[static_cast<size_t>(l)], c[static_cast<size_t>(l)], rng);
      enc_.emplace_back(c1, c2);
      cin = c[static_cast<size_t>(l)];
    }

    dec_middle_ = make_decoder("dec.mid", false, rng);
    if (cfg_.share_nonmiddle) {
      dec_shared_ = make_decoder("dec.shared", true, rng);
    } else {
      for (int j = 0; j < n; ++j) {
        if (j == cfg_.middle()) continue;
        dec_frames_.emplace(j, make_decoder("dec.f" + std::to_string(j), true, rng));
      }
    }

    for (int j = 0; j < n; ++j) {
      if (j == cfg_.middle()) continue;
      for (int l = 0; l < k; ++l) {
        const std::string base = "f" + std::to_string(j) + ".l" + std::to_string(l);
        ftn_stn_.emplace(key(j, l), make_stn("ftn." + base + ".stn", c[static_cast<size_t>(l)], rng));
        if (cfg_.use_lw)
          ftn_lw_.emplace(key(j, l), make_lw("ftn." + base + ".lw", c[static_cast<size_t>(l)], rng));
      }
      if (cfg_.use_itn) {
        for (int si = 0; si < k; ++si) {
          const std::string base =
              "itn.f" + std::to_string(j) + ".s" + std::to_string(si);
          itn_.emplace(key(j, si), make_stn(base, 3, rng));
        }
      }
    }
  }

  // ---- forward helpers ----

  Var run_conv(ParamContext& ctx, const ConvSpec& spec, const Var& x) const {
    return ad::conv2d(x, ctx.get(spec.w), ctx.get(spec.b), spec.stride, spec.pad);
  }

  Var run_dense(ParamContext& ctx, const DenseBlockSpec& spec, const Var& x) const {
    std::vector<Var> feats{x};
    for (size_t i = 0; i + 1 < spec.convs.size(); ++i) {
      Var in = feats.size() == 1 ? feats[0] : ad::concat_channels(feats);
      feats.push_back(ad::leaky_relu(run_conv(ctx, spec.convs[i], in), cfg_.lrelu_slope));
    }
    return ad::leaky_relu(run_conv(ctx, spec.convs.back(), ad::concat_channels(feats)),
                          cfg_.lrelu_slope);
  }

  Var run_stn_regressor(ParamContext& ctx, const StnSpec& spec, const Var& x) const {
    Var h = ad::leaky_relu(run_conv(ctx, spec.c1, x), cfg_.lrelu_slope);
    h = ad::leaky_relu(run_conv(ctx, spec.c2, h), cfg_.lrelu_slope);
    return ad::linear(ad::global_avg_pool(h), ctx.get(spec.fc.w), ctx.get(spec.fc.b));
  }

  Var run_lw_regressor(ParamContext& ctx, const LwSpec& spec, const Var& x) const {
    Var h = ad::leaky_relu(run_conv(ctx, spec.c1, x), cfg_.lrelu_slope);
    h = ad::leaky_relu(run_conv(ctx, spec.c2, h), cfg_.lrelu_slope);
    return run_conv(ctx, spec.c3, h);
  }

  // Shared decoder topology: per stage, deconv the running feature,
  // upsample the running image, concatenate stage-specific skips, apply
  // the dense block and emit an image.
  std::pair<std::vector<Var>, Var> run_decoder(
      ParamContext& ctx, const DecoderSpec& dec, const Var& seed,
      const std::function<std::vector<Var>(int)>& extra) const {
    std::vector<Var> images;
    Var feat = seed;
    for (int si = 0; si < cfg_.levels; ++si) {
      const DecoderStageSpec& stage = dec.stages[static_cast<size_t>(si)];
      std::vector<Var> parts;
      parts.push_back(
          ad::conv_transpose2d_s2(feat, ctx.get(stage.up.w), ctx.get(stage.up.b)));
      if (si > 0) parts.push_back(ad::upsample2x(images.back()));
      for (auto& e : extra(si)) parts.push_back(e);
      feat = run_dense(ctx, stage.dense, ad::concat_channels(parts));
      images.push_back(run_conv(ctx, stage.img, feat));
    }
    return {images, feat};
  }

  NetworkConfig cfg_;
  ParamStore params_;
  std::vector<std::pair<ConvSpec, ConvSpec>> enc_;
  DecoderSpec dec_middle_;
  DecoderSpec dec_shared_;
  std::unordered_map<int, DecoderSpec> dec_frames_;
  std::unordered_map<int, StnSpec> ftn_stn_;
  std::unordered_map<int, LwSpec> ftn_lw_;
  std::unordered_map<int, StnSpec> itn_;
};

}  // namespace blur2vid::nn
