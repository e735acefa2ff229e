#pragma once

#include <algorithm>
#include <cmath>

#include "blur2vid/autodiff/autodiff.hpp"

namespace blur2vid::ad {

// im2col patch matrix: one row per output pixel, columns ordered
// (ky, kx, ci). Out-of-bounds taps are zero.
template <typename S>
MatrixRM<S> im2col(const Tensor<S>& x, int k, int stride, int pad, Eigen::Index out_h,
                   Eigen::Index out_w) {
  const Eigen::Index h = x.dim(0), w = x.dim(1), c = x.dim(2);
  MatrixRM<S> cols = MatrixRM<S>::Zero(out_h * out_w, static_cast<Eigen::Index>(k) * k * c);
  for (Eigen::Index oy = 0; oy < out_h; ++oy) {
    for (Eigen::Index ox = 0; ox < out_w; ++ox) {
      const Eigen::Index row = oy * out_w + ox;
      for (int ky = 0; ky < k; ++ky) {
        const Eigen::Index iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const Eigen::Index ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= w) continue;
          const Eigen::Index col0 = (static_cast<Eigen::Index>(ky) * k + kx) * c;
          const S* src = &x(iy, ix, 0);
          S* dst = cols.data() + row * cols.cols() + col0;
          std::copy(src, src + c, dst);
        }
      }
    }
  }
  return cols;
}

// Scatter-add of a patch-gradient matrix back to the input layout;
// adjoint of im2col.
template <typename S>
void col2im_add(const MatrixRM<S>& cols, int k, int stride, int pad, Tensor<S>& dx,
                Eigen::Index out_h, Eigen::Index out_w) {
  const Eigen::Index h = dx.dim(0), w = dx.dim(1), c = dx.dim(2);
  for (Eigen::Index oy = 0; oy < out_h; ++oy) {
    for (Eigen::Index ox = 0; ox < out_w; ++ox) {
      const Eigen::Index row = oy * out_w + ox;
      for (int ky = 0; ky < k; ++ky) {
        const Eigen::Index iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const Eigen::Index ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= w) continue;
          const Eigen::Index col0 = (static_cast<Eigen::Index>(ky) * k + kx) * c;
          const S* src = cols.data() + row * cols.cols() + col0;
          S* dst = &dx(iy, ix, 0);
          for (Eigen::Index ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
}

// 2-D convolution. x: (H, W, Cin), w: (K, K, Cin, Cout), b: (Cout).
template <typename S>
Variable<S> conv2d(const Variable<S>& x, const Variable<S>& w, const Variable<S>& b, int stride,
                   int pad) {
  const Tensor<S>& xv = x.value();
  const Tensor<S>& wv = w.value();
  if (xv.rank() != 3 || wv.rank() != 4) throw validation_error("conv2d: bad ranks");
  const int k = static_cast<int>(wv.dim(0));
  const Eigen::Index cin = wv.dim(2), cout = wv.dim(3);
  if (xv.dim(2) != cin)
    throw validation_error("conv2d: input channels " + std::to_string(xv.dim(2)) +
                           " != weight channels " + std::to_string(cin));
  const Eigen::Index out_h = (xv.dim(0) + 2 * pad - k) / stride + 1;
  const Eigen::Index out_w = (xv.dim(1) + 2 * pad - k) / stride + 1;
  if (out_h < 1 || out_w < 1) throw validation_error("conv2d: output collapses to zero size");

  MatrixRM<S> cols = im2col(xv, k, stride, pad, out_h, out_w);
  Tensor<S> out({out_h, out_w, cout});
  auto out_m = out.as_matrix(out_h * out_w, cout);
  out_m.noalias() = cols * wv.as_matrix(static_cast<Eigen::Index>(k) * k * cin, cout);
  out_m.rowwise() += b.value().as_matrix(1, cout).row(0);

  auto px = x.node();
  auto pw = w.node();
  auto pb = b.node();
  const Shape x_shape = xv.shape();
  return Variable<S>::op(
      std::move(out), {x, w, b},
      [px, pw, pb, cols = std::move(cols), k, stride, pad, x_shape, cin, cout, out_h,
       out_w](Node<S>& n) {
        const auto dy = n.grad.as_matrix(out_h * out_w, cout);
        if (pw->requires_grad) {
          Tensor<S> dw({static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k), cin, cout});
          dw.as_matrix(static_cast<Eigen::Index>(k) * k * cin, cout).noalias() =
              cols.transpose() * dy;
          pw->accumulate(dw);
        }
        if (pb->requires_grad) {
          Tensor<S> db({cout});
          db.as_matrix(1, cout).row(0) = dy.colwise().sum();
          pb->accumulate(db);
        }
        if (px->requires_grad) {
          const auto wm = pw->value.as_matrix(static_cast<Eigen::Index>(k) * k * cin, cout);
          MatrixRM<S> dcols = dy * wm.transpose();
          Tensor<S> dx(x_shape);
          col2im_add(dcols, k, stride, pad, dx, out_h, out_w);
          px->accumulate(dx);
        }
      });
}

// Transposed convolution with kernel 4, stride 2, padding 1 (exact x2
// upsampling). x: (H, W, Cin), w: (Cin, 4, 4, Cout), b: (Cout).
template <typename S>
Variable<S> conv_transpose2d_s2(const Variable<S>& x, const Variable<S>& w, const Variable<S>& b) {
  constexpr int k = 4, stride = 2, pad = 1;
  const Tensor<S>& xv = x.value();
  const Tensor<S>& wv = w.value();
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(1) != k || wv.dim(2) != k)
    throw validation_error("conv_transpose2d_s2: bad shapes");
  const Eigen::Index cin = wv.dim(0), cout = wv.dim(3);
  if (xv.dim(2) != cin) throw validation_error("conv_transpose2d_s2: channel mismatch");
  const Eigen::Index h = xv.dim(0), wdim = xv.dim(1);
  const Eigen::Index out_h = h * stride, out_w = wdim * stride;

  // tmp[i, (ky,kx,co)] = sum_ci x[i,ci] * w[ci,ky,kx,co]
  const auto xm = xv.as_matrix(h * wdim, cin);
  const auto wm = wv.as_matrix(cin, static_cast<Eigen::Index>(k) * k * cout);
  MatrixRM<S> tmp = xm * wm;

  Tensor<S> out({out_h, out_w, cout});
  for (Eigen::Index co = 0; co < cout; ++co) {
    const S bias = b.value().at(co);
    for (Eigen::Index oy = 0; oy < out_h; ++oy)
      for (Eigen::Index ox = 0; ox < out_w; ++ox) out(oy, ox, co) = bias;
  }
  for (Eigen::Index iy = 0; iy < h; ++iy) {
    for (Eigen::Index ix = 0; ix < wdim; ++ix) {
      const S* row = tmp.data() + (iy * wdim + ix) * tmp.cols();
      for (int ky = 0; ky < k; ++ky) {
        const Eigen::Index oy = iy * stride - pad + ky;
        if (oy < 0 || oy >= out_h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const Eigen::Index ox = ix * stride - pad + kx;
          if (ox < 0 || ox >= out_w) continue;
          const S* src = row + (static_cast<Eigen::Index>(ky) * k + kx) * cout;
          S* dst = &out(oy, ox, 0);
          for (Eigen::Index co = 0; co < cout; ++co) dst[co] += src[co];
        }
      }
    }
  }

  auto px = x.node();
  auto pw = w.node();
  auto pb = b.node();
  return Variable<S>::op(
      std::move(out), {x, w, b},
      [px, pw, pb, h, wdim, cin, cout, out_h, out_w](Node<S>& n) {
        constexpr int kk = 4, st = 2, pd = 1;
        // Gather the adjoint of the scatter above.
        MatrixRM<S> dtmp =
            MatrixRM<S>::Zero(h * wdim, static_cast<Eigen::Index>(kk) * kk * cout);
        for (Eigen::Index iy = 0; iy < h; ++iy) {
          for (Eigen::Index ix = 0; ix < wdim; ++ix) {
            S* row = dtmp.data() + (iy * wdim + ix) * dtmp.cols();
            for (int ky = 0; ky < kk; ++ky) {
              const Eigen::Index oy = iy * st - pd + ky;
              if (oy < 0 || oy >= out_h) continue;
              for (int kx = 0; kx < kk; ++kx) {
                const Eigen::Index ox = ix * st - pd + kx;
                if (ox < 0 || ox >= out_w) continue;
                const S* src = &n.grad(oy, ox, 0);
                S* dst = row + (static_cast<Eigen::Index>(ky) * kk + kx) * cout;
                for (Eigen::Index co = 0; co < cout; ++co) dst[co] += src[co];
              }
            }
          }
        }
        if (px->requires_grad) {
          const auto wm = pw->value.as_matrix(cin, static_cast<Eigen::Index>(kk) * kk * cout);
          Tensor<S> dx({h, wdim, cin});
          dx.as_matrix(h * wdim, cin).noalias() = dtmp * wm.transpose();
          px->accumulate(dx);
        }
        if (pw->requires_grad) {
          const auto xm = px->value.as_matrix(h * wdim, cin);
          Tensor<S> dw({cin, static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(kk), cout});
          dw.as_matrix(cin, static_cast<Eigen::Index>(kk) * kk * cout).noalias() =
              xm.transpose() * dtmp;
          pw->accumulate(dw);
        }
        if (pb->requires_grad) {
          Tensor<S> db({cout});
          db.as_matrix(1, cout).row(0) =
              n.grad.as_matrix(out_h * out_w, cout).colwise().sum();
          pb->accumulate(db);
        }
      });
}

// Fully connected layer on a flat vector. x: (Cin), w: (Cin, Cout), b: (Cout).
template <typename S>
Variable<S> linear(const Variable<S>& x, const Variable<S>& w, const Variable<S>& b) {
  const Eigen::Index cin = w.value().dim(0), cout = w.value().dim(1);
  if (x.value().rank() != 1 || x.value().dim(0) != cin)
    throw validation_error("linear: shape mismatch");
  Tensor<S> out({cout});
  out.as_matrix(1, cout).noalias() =
      x.value().as_matrix(1, cin) * w.value().as_matrix(cin, cout);
  out.array() += b.value().array();
  auto px = x.node();
  auto pw = w.node();
  auto pb = b.node();
  return Variable<S>::op(std::move(out), {x, w, b}, [px, pw, pb, cin, cout](Node<S>& n) {
    const auto dy = n.grad.as_matrix(1, cout);
    if (px->requires_grad) {
      Tensor<S> dx({cin});
      dx.as_matrix(1, cin).noalias() = dy * pw->value.as_matrix(cin, cout).transpose();
      px->accumulate(dx);
    }
    if (pw->requires_grad) {
      Tensor<S> dw({cin, cout});
      dw.as_matrix(cin, cout).noalias() = px->value.as_matrix(1, cin).transpose() * dy;
      pw->accumulate(dw);
    }
    if (pb->requires_grad) pb->accumulate(n.grad);
  });
}

// Spatial mean over (H, W), producing a (C) vector.
template <typename S>
Variable<S> global_avg_pool(const Variable<S>& x) {
  const Eigen::Index h = x.value().dim(0), w = x.value().dim(1), c = x.value().dim(2);
  Tensor<S> out({c});
  out.as_matrix(1, c).row(0) = x.value().as_matrix(h * w, c).colwise().mean();
  auto px = x.node();
  return Variable<S>::op(std::move(out), {x}, [px, h, w, c](Node<S>& n) {
    Tensor<S> dx({h, w, c});
    const S inv = S(1) / static_cast<S>(h * w);
    auto dxm = dx.as_matrix(h * w, c);
    for (Eigen::Index r = 0; r < h * w; ++r)
      for (Eigen::Index ch = 0; ch < c; ++ch) dxm(r, ch) = n.grad.at(ch) * inv;
    px->accumulate(dx);
  });
}

// Bilinear x2 upsampling with half-pixel centers and border clamping.
template <typename S>
Variable<S> upsample2x(const Variable<S>& x) {
  const Eigen::Index h = x.value().dim(0), w = x.value().dim(1), c = x.value().dim(2);
  const Eigen::Index oh = h * 2, ow = w * 2;
  struct Tap {
    Eigen::Index i0, i1;
    S f;
  };
  auto taps = [](Eigen::Index out_n, Eigen::Index in_n) {
    std::vector<Tap> t(static_cast<size_t>(out_n));
    for (Eigen::Index o = 0; o < out_n; ++o) {
      S p = (static_cast<S>(o) + S(0.5)) / S(2) - S(0.5);
      p = std::min(std::max(p, S(0)), static_cast<S>(in_n - 1));
      const Eigen::Index i0 = static_cast<Eigen::Index>(std::floor(p));
      t[static_cast<size_t>(o)] = {i0, std::min(i0 + 1, in_n - 1), p - static_cast<S>(i0)};
    }
    return t;
  };
  const std::vector<Tap> ty = taps(oh, h), tx = taps(ow, w);

  Tensor<S> out({oh, ow, c});
  const Tensor<S>& xv = x.value();
  for (Eigen::Index oy = 0; oy < oh; ++oy) {
    const Tap& a = ty[static_cast<size_t>(oy)];
    for (Eigen::Index ox = 0; ox < ow; ++ox) {
      const Tap& b = tx[static_cast<size_t>(ox)];
      for (Eigen::Index ch = 0; ch < c; ++ch) {
        const S top = (S(1) - b.f) * xv(a.i0, b.i0, ch) + b.f * xv(a.i0, b.i1, ch);
        const S bot = (S(1) - b.f) * xv(a.i1, b.i0, ch) + b.f * xv(a.i1, b.i1, ch);
        out(oy, ox, ch) = (S(1) - a.f) * top + a.f * bot;
      }
    }
  }
  auto px = x.node();
  return Variable<S>::op(std::move(out), {x}, [px, ty, tx, h, w, c, oh, ow](Node<S>& n) {
    Tensor<S> dx({h, w, c});
    for (Eigen::Index oy = 0; oy < oh; ++oy) {
      const Tap& a = ty[static_cast<size_t>(oy)];
      for (Eigen::Index ox = 0; ox < ow; ++ox) {
        const Tap& b = tx[static_cast<size_t>(ox)];
        for (Eigen::Index ch = 0; ch < c; ++ch) {
          const S g = n.grad(oy, ox, ch);
          dx(a.i0, b.i0, ch) += (S(1) - a.f) * (S(1) - b.f) * g;
          dx(a.i0, b.i1, ch) += (S(1) - a.f) * b.f * g;
          dx(a.i1, b.i0, ch) += a.f * (S(1) - b.f) * g;
          dx(a.i1, b.i1, ch) += a.f * b.f * g;
        }
      }
    }
    px->accumulate(dx);
  });
}

}  // namespace blur2vid::ad
