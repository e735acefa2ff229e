#pragma once

#include <cmath>

#include "blur2vid/autodiff/autodiff.hpp"

namespace blur2vid::warp {

using ad::Node;
using ad::Variable;

// Affine parameters are a row-major 2x3 matrix [a11,a12,t1; a21,a22,t2]
// acting on normalized coordinates where (-1,-1) is the top-left pixel
// center and (+1,+1) the bottom-right one (align-corners convention).
// Identity is [1,0,0; 0,1,0].
template <typename S>
Tensor<S> identity_affine() {
  Tensor<S> t({6});
  t.at(0) = S(1);
  t.at(4) = S(1);
  return t;
}

namespace detail {

// Source pixel coordinates are computed directly in pixel units so that
// the identity transform reproduces integer grid positions bit-exactly:
// xs = a11*u + a12*(hx/hy)*v + t1*hx + cx with u = x - cx, v = y - cy.
template <typename S>
struct AffineGrid {
  S cx, cy, hx, hy, rx, ry;

  AffineGrid(Eigen::Index h, Eigen::Index w) {
    cx = static_cast<S>(w - 1) / S(2);
    cy = static_cast<S>(h - 1) / S(2);
    hx = cx;
    hy = cy;
    rx = hy > S(0) ? hx / hy : S(0);
    ry = hx > S(0) ? hy / hx : S(0);
  }

  void map(const S* th, S x, S y, S& xs, S& ys) const {
    const S u = x - cx;
    const S v = y - cy;
    xs = th[0] * u + th[1] * rx * v + th[2] * hx + cx;
    ys = th[3] * ry * u + th[4] * v + th[5] * hy + cy;
  }
};

template <typename S>
struct BilinearTap {
  Eigen::Index x0, y0;
  S fx, fy;
  bool in00, in01, in10, in11;

  BilinearTap(S xs, S ys, Eigen::Index h, Eigen::Index w) {
    x0 = static_cast<Eigen::Index>(std::floor(xs));
    y0 = static_cast<Eigen::Index>(std::floor(ys));
    fx = xs - static_cast<S>(x0);
    fy = ys - static_cast<S>(y0);
    in00 = y0 >= 0 && y0 < h && x0 >= 0 && x0 < w;
    in01 = y0 >= 0 && y0 < h && x0 + 1 >= 0 && x0 + 1 < w;
    in10 = y0 + 1 >= 0 && y0 + 1 < h && x0 >= 0 && x0 < w;
    in11 = y0 + 1 >= 0 && y0 + 1 < h && x0 + 1 >= 0 && x0 + 1 < w;
  }
};

}  // namespace detail

// Samples u at theta-mapped coordinates with zero padding outside the
// input. Output shape equals the input shape.
template <typename S>
Tensor<S> affine_grid_sample_value(const Tensor<S>& u, const S* theta) {
  for (int i = 0; i < 6; ++i)
    if (!std::isfinite(theta[i])) throw numeric_error("affine_grid_sample: non-finite theta");
  const Eigen::Index h = u.dim(0), w = u.dim(1), c = u.dim(2);
  const detail::AffineGrid<S> grid(h, w);
  Tensor<S> out({h, w, c});
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      S xs, ys;
      grid.map(theta, static_cast<S>(x), static_cast<S>(y), xs, ys);
      const detail::BilinearTap<S> t(xs, ys, h, w);
      const S v00w = (S(1) - t.fy) * (S(1) - t.fx);
      const S v01w = (S(1) - t.fy) * t.fx;
      const S v10w = t.fy * (S(1) - t.fx);
      const S v11w = t.fy * t.fx;
      for (Eigen::Index ch = 0; ch < c; ++ch) {
        S acc = S(0);
        if (t.in00) acc += v00w * u(t.y0, t.x0, ch);
        if (t.in01) acc += v01w * u(t.y0, t.x0 + 1, ch);
        if (t.in10) acc += v10w * u(t.y0 + 1, t.x0, ch);
        if (t.in11) acc += v11w * u(t.y0 + 1, t.x0 + 1, ch);
        out(y, x, ch) = acc;
      }
    }
  }
  return out;
}

template <typename S>
void affine_grid_sample_backward(const Tensor<S>& u, const S* theta, const Tensor<S>& gout,
                                 Tensor<S>* du, S* dtheta) {
  const Eigen::Index h = u.dim(0), w = u.dim(1), c = u.dim(2);
  const detail::AffineGrid<S> grid(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      S xs, ys;
      grid.map(theta, static_cast<S>(x), static_cast<S>(y), xs, ys);
      const detail::BilinearTap<S> t(xs, ys, h, w);
      S dxs = S(0), dys = S(0);
      for (Eigen::Index ch = 0; ch < c; ++ch) {
        const S g = gout(y, x, ch);
        const S v00 = t.in00 ? u(t.y0, t.x0, ch) : S(0);
        const S v01 = t.in01 ? u(t.y0, t.x0 + 1, ch) : S(0);
        const S v10 = t.in10 ? u(t.y0 + 1, t.x0, ch) : S(0);
        const S v11 = t.in11 ? u(t.y0 + 1, t.x0 + 1, ch) : S(0);
        if (dtheta) {
          dxs += g * ((S(1) - t.fy) * (v01 - v00) + t.fy * (v11 - v10));
          dys += g * ((S(1) - t.fx) * (v10 - v00) + t.fx * (v11 - v01));
        }
        if (du) {
          if (t.in00) (*du)(t.y0, t.x0, ch) += (S(1) - t.fy) * (S(1) - t.fx) * g;
          if (t.in01) (*du)(t.y0, t.x0 + 1, ch) += (S(1) - t.fy) * t.fx * g;
          if (t.in10) (*du)(t.y0 + 1, t.x0, ch) += t.fy * (S(1) - t.fx) * g;
          if (t.in11) (*du)(t.y0 + 1, t.x0 + 1, ch) += t.fy * t.fx * g;
        }
      }
      if (dtheta) {
        const S uu = static_cast<S>(x) - grid.cx;
        const S vv = static_cast<S>(y) - grid.cy;
        dtheta[0] += dxs * uu;
        dtheta[1] += dxs * grid.rx * vv;
        dtheta[2] += dxs * grid.hx;
        dtheta[3] += dys * grid.ry * uu;
        dtheta[4] += dys * vv;
        dtheta[5] += dys * grid.hy;
      }
    }
  }
}

// out(x, y) = bilinear sample of u at (x + dx, y + dy), flow in pixels.
template <typename S>
Tensor<S> local_warp_value(const Tensor<S>& u, const Tensor<S>& flow) {
  const Eigen::Index h = u.dim(0), w = u.dim(1), c = u.dim(2);
  if (flow.rank() != 3 || flow.dim(0) != h || flow.dim(1) != w || flow.dim(2) != 2)
    throw validation_error("local_warp: flow must be (H,W,2) matching the feature");
  Tensor<S> out({h, w, c});
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const S xs = static_cast<S>(x) + flow(y, x, 0);
      const S ys = static_cast<S>(y) + flow(y, x, 1);
      const detail::BilinearTap<S> t(xs, ys, h, w);
      for (Eigen::Index ch = 0; ch < c; ++ch) {
        S acc = S(0);
        if (t.in00) acc += (S(1) - t.fy) * (S(1) - t.fx) * u(t.y0, t.x0, ch);
        if (t.in01) acc += (S(1) - t.fy) * t.fx * u(t.y0, t.x0 + 1, ch);
        if (t.in10) acc += t.fy * (S(1) - t.fx) * u(t.y0 + 1, t.x0, ch);
        if (t.in11) acc += t.fy * t.fx * u(t.y0 + 1, t.x0 + 1, ch);
        out(y, x, ch) = acc;
      }
    }
  }
  return out;
}

template <typename S>
void local_warp_backward(const Tensor<S>& u, const Tensor<S>& flow, const Tensor<S>& gout,
                         Tensor<S>* du, Tensor<S>* dflow) {
  const Eigen::Index h = u.dim(0), w = u.dim(1), c = u.dim(2);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const S xs = static_cast<S>(x) + flow(y, x, 0);
      const S ys = static_cast<S>(y) + flow(y, x, 1);
      const detail::BilinearTap<S> t(xs, ys, h, w);
      S dxs = S(0), dys = S(0);
      for (Eigen::Index ch = 0; ch < c; ++ch) {
        const S g = gout(y, x, ch);
        const S v00 = t.in00 ? u(t.y0, t.x0, ch) : S(0);
        const S v01 = t.in01 ? u(t.y0, t.x0 + 1, ch) : S(0);
        const S v10 = t.in10 ? u(t.y0 + 1, t.x0, ch) : S(0);
        const S v11 = t.in11 ? u(t.y0 + 1, t.x0 + 1, ch) : S(0);
        if (dflow) {
          dxs += g * ((S(1) - t.fy) * (v01 - v00) + t.fy * (v11 - v10));
          dys += g * ((S(1) - t.fx) * (v10 - v00) + t.fx * (v11 - v01));
        }
        if (du) {
          if (t.in00) (*du)(t.y0, t.x0, ch) += (S(1) - t.fy) * (S(1) - t.fx) * g;
          if (t.in01) (*du)(t.y0, t.x0 + 1, ch) += (S(1) - t.fy) * t.fx * g;
          if (t.in10) (*du)(t.y0 + 1, t.x0, ch) += t.fy * (S(1) - t.fx) * g;
          if (t.in11) (*du)(t.y0 + 1, t.x0 + 1, ch) += t.fy * t.fx * g;
        }
      }
      if (dflow) {
        (*dflow)(y, x, 0) += dxs;
        (*dflow)(y, x, 1) += dys;
      }
    }
  }
}

// Differentiable wrappers.

template <typename S>
Variable<S> affine_grid_sample(const Variable<S>& u, const Variable<S>& theta) {
  if (theta.value().size() != 6)
    throw validation_error("affine_grid_sample: theta must have 6 entries");
  Tensor<S> out = affine_grid_sample_value(u.value(), theta.value().data());
  auto pu = u.node();
  auto pt = theta.node();
  return Variable<S>::op(std::move(out), {u, theta}, [pu, pt](Node<S>& n) {
    Tensor<S> du;
    Tensor<S> dtheta;
    if (pu->requires_grad) du = Tensor<S>(pu->value.shape());
    if (pt->requires_grad) dtheta = Tensor<S>({6});
    affine_grid_sample_backward(pu->value, pt->value.data(), n.grad,
                                pu->requires_grad ? &du : nullptr,
                                pt->requires_grad ? dtheta.data() : nullptr);
    if (pu->requires_grad) pu->accumulate(du);
    if (pt->requires_grad) pt->accumulate(dtheta);
  });
}

template <typename S>
Variable<S> local_warp(const Variable<S>& u, const Variable<S>& flow) {
  if (!flow.value().all_finite()) throw numeric_error("local_warp: non-finite flow");
  Tensor<S> out = local_warp_value(u.value(), flow.value());
  auto pu = u.node();
  auto pf = flow.node();
  return Variable<S>::op(std::move(out), {u, flow}, [pu, pf](Node<S>& n) {
    Tensor<S> du;
    Tensor<S> dflow;
    if (pu->requires_grad) du = Tensor<S>(pu->value.shape());
    if (pf->requires_grad) dflow = Tensor<S>(pf->value.shape());
    local_warp_backward(pu->value, pf->value, n.grad, pu->requires_grad ? &du : nullptr,
                        pf->requires_grad ? &dflow : nullptr);
    if (pu->requires_grad) pu->accumulate(du);
    if (pf->requires_grad) pf->accumulate(dflow);
  });
}

}  // namespace blur2vid::warp
