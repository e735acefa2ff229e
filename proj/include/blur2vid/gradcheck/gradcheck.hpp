#pragma once

#include <functional>
#include <string>
#include <vector>

#include "blur2vid/autodiff/autodiff.hpp"
#include "blur2vid/core/image.hpp"
#include "blur2vid/core/rng.hpp"
#include "blur2vid/objectives/losses.hpp"
#include "blur2vid/warp/warp.hpp"

namespace blur2vid::gradcheck {

using ad::Variable;
using TensorD = Tensor<double>;
using VarD = Variable<double>;

struct GradCheckResult {
  std::string name;
  int instances = 0;
  double max_rel_err = 0.0;
  double tolerance = 1e-3;
  bool pass = false;
};

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({1e-6, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

// Compares supplied analytic gradients of a scalar function against
// central finite differences over every element of every input. Taking
// the analytic gradients from the caller lets tests feed corrupted
// values to verify the harness flags them.
inline double max_gradient_error(const std::function<double(const std::vector<TensorD>&)>& fn,
                                 std::vector<TensorD> inputs,
                                 const std::vector<TensorD>& analytic_grads,
                                 double eps = 1e-4) {
  double worst = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (Eigen::Index e = 0; e < inputs[i].size(); ++e) {
      const double orig = inputs[i].at(e);
      inputs[i].at(e) = orig + eps;
      const double fp = fn(inputs);
      inputs[i].at(e) = orig - eps;
      const double fm = fn(inputs);
      inputs[i].at(e) = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = analytic_grads[i].empty() ? 0.0 : analytic_grads[i].at(e);
      worst = std::max(worst, relative_error(analytic, numeric));
    }
  }
  return worst;
}

inline GradCheckResult check_scalar_function(
    const std::string& name, const std::function<double(const std::vector<TensorD>&)>& fn,
    const std::vector<TensorD>& inputs, const std::vector<TensorD>& analytic_grads,
    double eps = 1e-4, double tol = 1e-3) {
  GradCheckResult r;
  r.name = name;
  r.instances = 1;
  r.tolerance = tol;
  r.max_rel_err = max_gradient_error(fn, inputs, analytic_grads, eps);
  r.pass = r.max_rel_err < tol;
  return r;
}

// One random problem instance: differentiable inputs plus the graph that
// consumes them (constants such as ground truth live inside the closure
// so finite differences never perturb them).
struct Instance {
  std::vector<TensorD> inputs;
  std::function<VarD(const std::vector<VarD>&)> graph;
};

namespace detail {

inline std::vector<TensorD> autodiff_grads(const Instance& inst) {
  std::vector<VarD> leaves;
  for (const auto& t : inst.inputs) leaves.push_back(VarD::leaf(t, true));
  VarD out = inst.graph(leaves);
  out.backward();
  std::vector<TensorD> grads;
  for (const auto& l : leaves)
    grads.push_back(l.has_grad() ? l.grad() : TensorD(l.value().shape()));
  return grads;
}

inline GradCheckResult check_many(const std::string& name, int instances, std::uint64_t seed,
                                  const std::function<Instance(Rng&)>& make_instance,
                                  double eps = 1e-4, double tol = 1e-3) {
  GradCheckResult r;
  r.name = name;
  r.instances = instances;
  r.tolerance = tol;
  for (int i = 0; i < instances; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Instance inst = make_instance(rng);
    const std::vector<TensorD> grads = autodiff_grads(inst);
    auto fn = [&inst](const std::vector<TensorD>& in) {
      std::vector<VarD> leaves;
      for (const auto& t : in) leaves.push_back(VarD::leaf(t, false));
      return inst.graph(leaves).item();
    };
    r.max_rel_err = std::max(r.max_rel_err, max_gradient_error(fn, inst.inputs, grads, eps));
  }
  r.pass = r.max_rel_err < tol;
  return r;
}

// Central differences sit on the wrong side of a bilinear kink whenever
// a sampling coordinate is within eps of an integer, so generators keep
// a safety margin around the lattice.
inline bool near_integer(double v, double margin) {
  const double f = v - std::floor(v);
  return f < margin || f > 1.0 - margin;
}

inline TensorD safe_affine_theta(Rng& rng, Eigen::Index h, Eigen::Index w, double span) {
  const warp::detail::AffineGrid<double> grid(h, w);
  for (int attempt = 0; attempt < 200; ++attempt) {
    TensorD theta = warp::identity_affine<double>();
    for (Eigen::Index i = 0; i < 6; ++i) theta.at(i) += rng.uniform(-span, span);
    bool ok = true;
    for (Eigen::Index y = 0; y < h && ok; ++y)
      for (Eigen::Index x = 0; x < w && ok; ++x) {
        double xs, ys;
        grid.map(theta.data(), static_cast<double>(x), static_cast<double>(y), xs, ys);
        if (near_integer(xs, 5e-3) || near_integer(ys, 5e-3)) ok = false;
      }
    if (ok) return theta;
  }
  throw numeric_error("safe_affine_theta: could not find kink-free parameters");
}

inline TensorD safe_flow(Rng& rng, Eigen::Index h, Eigen::Index w) {
  TensorD flow({h, w, 2});
  for (Eigen::Index i = 0; i < flow.size(); ++i) {
    double v = rng.uniform(-0.75, 0.75);
    while (near_integer(v, 5e-3)) v = rng.uniform(-0.75, 0.75);
    flow.at(i) = v;
  }
  return flow;
}

// Prediction whose residual against the target is bounded away from the
// L1 kink at zero.
inline TensorD offset_from(const TensorD& target, Rng& rng, double lo = 0.02, double hi = 0.2) {
  TensorD out = target;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    out.at(i) += sign * rng.uniform(lo, hi);
  }
  return out;
}

// Three GT frames in disjoint value bands so both the direct and the
// time-symmetric residuals stay away from zero.
inline std::vector<TensorD> banded_gt(Rng& rng, Eigen::Index size) {
  return {random_tensor<double>({size, size, 3}, rng, 0.00, 0.20),
          random_tensor<double>({size, size, 3}, rng, 0.40, 0.60),
          random_tensor<double>({size, size, 3}, rng, 0.80, 1.00)};
}

}  // namespace detail

inline GradCheckResult gradcheck_affine_sample(int instances = 20, std::uint64_t seed = 17) {
  return detail::check_many("affine_grid_sample", instances, seed, [](Rng& rng) {
    Instance inst;
    inst.inputs = {random_tensor<double>({5, 5, 2}, rng, -1.0, 1.0),
                   detail::safe_affine_theta(rng, 5, 5, 0.15)};
    inst.graph = [](const std::vector<VarD>& in) {
      return ad::sum_all(warp::affine_grid_sample(in[0], in[1]));
    };
    return inst;
  });
}

inline GradCheckResult gradcheck_local_warp(int instances = 20, std::uint64_t seed = 23) {
  return detail::check_many("local_warp", instances, seed, [](Rng& rng) {
    Instance inst;
    inst.inputs = {random_tensor<double>({5, 5, 2}, rng, -1.0, 1.0), detail::safe_flow(rng, 5, 5)};
    inst.graph = [](const std::vector<VarD>& in) {
      return ad::sum_all(warp::local_warp(in[0], in[1]));
    };
    return inst;
  });
}

inline GradCheckResult gradcheck_photometric(int instances = 20, std::uint64_t seed = 29) {
  return detail::check_many("multiscale_photometric", instances, seed, [](Rng& rng) {
    auto gt = detail::banded_gt(rng, 8);
    gt.pop_back();  // two frames suffice here
    Instance inst;
    for (const auto& g : gt) {
      inst.inputs.push_back(detail::offset_from(bilinear_resize(g, 4, 4), rng));
      inst.inputs.push_back(detail::offset_from(g, rng));
    }
    inst.graph = [gt](const std::vector<VarD>& in) {
      const std::vector<std::vector<VarD>> pred{{in[0], in[1]}, {in[2], in[3]}};
      return loss::multiscale_photometric(pred, gt, {0.5, 1.0});
    };
    return inst;
  });
}

inline GradCheckResult gradcheck_consistency(int instances = 20, std::uint64_t seed = 31) {
  return detail::check_many("transformation_consistency", instances, seed, [](Rng& rng) {
    Instance inst;
    for (int i = 0; i < 6; ++i) inst.inputs.push_back(random_tensor<double>({6}, rng, -0.5, 0.5));
    inst.graph = [](const std::vector<VarD>& in) {
      const std::vector<std::vector<VarD>> thetas{{in[0], in[1], in[2]}, {in[3], in[4], in[5]}};
      return loss::transformation_consistency(thetas);
    };
    return inst;
  });
}

inline GradCheckResult gradcheck_penalty(int instances = 20, std::uint64_t seed = 37) {
  return detail::check_many("symmetric_penalty", instances, seed, [](Rng& rng) {
    const std::vector<TensorD> gt = detail::banded_gt(rng, 6);
    Instance inst;
    // Predictions track the forward GT, so the symmetric residuals live
    // in a different band and stay kink-free.
    for (int j = 0; j < 3; ++j)
      inst.inputs.push_back(detail::offset_from(gt[static_cast<size_t>(j)], rng));
    inst.graph = [gt](const std::vector<VarD>& in) {
      const std::vector<VarD> pred{in[0], in[1], in[2]};
      return loss::symmetric_penalty(pred, gt, 1);
    };
    return inst;
  });
}

inline GradCheckResult gradcheck_total(int instances = 20, std::uint64_t seed = 41) {
  return detail::check_many("total_loss", instances, seed, [](Rng& rng) {
    const std::vector<TensorD> gt = detail::banded_gt(rng, 8);
    Instance inst;
    for (int j = 0; j < 3; ++j) {
      inst.inputs.push_back(
          detail::offset_from(bilinear_resize(gt[static_cast<size_t>(j)], 4, 4), rng));
      inst.inputs.push_back(detail::offset_from(gt[static_cast<size_t>(j)], rng));
    }
    for (int i = 0; i < 4; ++i)
      inst.inputs.push_back(random_tensor<double>({6}, rng, -0.5, 0.5));
    inst.graph = [gt](const std::vector<VarD>& in) {
      const std::vector<std::vector<VarD>> pred{{in[0], in[1]}, {in[2], in[3]}, {in[4], in[5]}};
      const std::vector<std::vector<VarD>> ftn{{in[6], in[7]}, {}, {in[8], in[9]}};
      loss::LossWeights w;
      w.w = {0.5, 1.0};
      return loss::total_loss(pred, ftn, {}, gt, 1, w).total;
    };
    return inst;
  });
}

inline std::vector<GradCheckResult> run_standard_gradchecks(std::uint64_t seed = 1,
                                                            int instances = 20) {
  return {gradcheck_affine_sample(instances, derive_seed(seed, 1)),
          gradcheck_local_warp(instances, derive_seed(seed, 2)),
          gradcheck_photometric(instances, derive_seed(seed, 3)),
          gradcheck_consistency(instances, derive_seed(seed, 4)),
          gradcheck_penalty(instances, derive_seed(seed, 5)),
          gradcheck_total(instances, derive_seed(seed, 6))};
}

}  // namespace blur2vid::gradcheck
