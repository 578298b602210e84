// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

namespace untrack::num {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

CMap cmap(const Array& a) { return CMap(a.raw(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols())); }
MMap mmap(Array& a) { return MMap(a.raw(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols())); }

void require_rank2(const Var& x, const char* op) {
  if (x.value().rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 operand, got " + to_string(x.shape()));
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

Tape& tape_of(const Var& x) {
  if (!x.valid()) throw std::logic_error("operation on an unbound Var");
  return *x.tape();
}

// Adds `g` into the gradient of node `id` when it participates in backward.
void accumulate(Tape& t, std::size_t id, const Array& g) {
  if (!t.requires_grad(id)) return;
  Array& buf = t.grad_buffer(id);
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

template <typename F>
Var unary(const char* op, const Var& x, F&& f, std::function<double(double x, double y)> dfdx) {
  Tape& t = tape_of(x);
  const Array& xv = x.value();
  Array out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const std::size_t xi = x.id();
  return t.record(op, std::move(out), {x}, [xi, dfdx](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Array& g = tp.upstream(self);
    const Array& xv = tp.value(xi);
    const Array& yv = tp.value(self);
    Array& buf = tp.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * dfdx(xv[i], yv[i]);
  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.value().cols() != b.value().rows()) {
    throw ShapeError("matmul: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  Tape& t = tape_of(a);
  Array out({a.value().rows(), b.value().cols()});
  mmap(out).noalias() = cmap(a.value()) * cmap(b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("matmul", std::move(out), {a, b}, [ai, bi](Tape& tp, std::size_t self) {
    const Array& g = tp.upstream(self);
    if (tp.requires_grad(ai)) mmap(tp.grad_buffer(ai)).noalias() += cmap(g) * cmap(tp.value(bi)).transpose();
    if (tp.requires_grad(bi)) mmap(tp.grad_buffer(bi)).noalias() += cmap(tp.value(ai)).transpose() * cmap(g);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  if (a.value().cols() != b.value().cols()) {
    throw ShapeError("matmul_nt: " + to_string(a.shape()) + " x " + to_string(b.shape()) + "^T");
  }
  Tape& t = tape_of(a);
  Array out({a.value().rows(), b.value().rows()});
  mmap(out).noalias() = cmap(a.value()) * cmap(b.value()).transpose();
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("matmul_nt", std::move(out), {a, b}, [ai, bi](Tape& tp, std::size_t self) {
    const Array& g = tp.upstream(self);
    if (tp.requires_grad(ai)) mmap(tp.grad_buffer(ai)).noalias() += cmap(g) * cmap(tp.value(bi));
    if (tp.requires_grad(bi)) mmap(tp.grad_buffer(bi)).noalias() += cmap(g).transpose() * cmap(tp.value(ai));
  });
}

Var transpose(const Var& x) {
  require_rank2(x, "transpose");
  Tape& t = tape_of(x);
  Array out({x.value().cols(), x.value().rows()});
  mmap(out) = cmap(x.value()).transpose();
  const std::size_t xi = x.id();
  return t.record("transpose", std::move(out), {x}, [xi](Tape& tp, std::size_t self) {
    if (tp.requires_grad(xi)) mmap(tp.grad_buffer(xi)) += cmap(tp.upstream(self)).transpose();
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tape& t = tape_of(a);
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("add", std::move(out), {a, b}, [ai, bi](Tape& tp, std::size_t self) {
    const Array& g = tp.upstream(self);
    accumulate(tp, ai, g);
    accumulate(tp, bi, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tape& t = tape_of(a);
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("sub", std::move(out), {a, b}, [ai, bi](Tape& tp, std::size_t self) {
    const Array& g = tp.upstream(self);
    accumulate(tp, ai, g);
    if (tp.requires_grad(bi)) {
      Array& buf = tp.grad_buffer(bi);
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tape& t = tape_of(a);
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("mul", std::move(out), {a, b}, [ai, bi](Tape& tp, std::size_t self) {
    const Array& g = tp.upstream(self);
    if (tp.requires_grad(ai)) {
      const Array& bv = tp.value(bi);
      Array& buf = tp.grad_buffer(ai);
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(bi)) {
      const Array& av = tp.value(ai);
      Array& buf = tp.grad_buffer(bi);
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& x, double factor) {
  return unary("scale", x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(const Var& x, double c) {
  return unary("add_scalar", x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var add_bias(const Var& x, const Var& bias) {
  require_rank2(x, "add_bias");
  const std::size_t n = x.value().cols();
  if (bias.value().size() != n) {
    throw ShapeError("add_bias: bias " + to_string(bias.shape()) + " does not match " + to_string(x.shape()));
  }
  Tape& t = tape_of(x);
  Array out = x.value();
  const Array& bv = bias.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) out.at(r, c) += bv[c];
  const std::size_t xi = x.id(), bi = bias.id();
  return t.record("add_bias", std::move(out), {x, bias}, [xi, bi, n](Tape& tp, std::size_t self) {
    const Array& g = tp.upstream(self);
    accumulate(tp, xi, g);
    if (tp.requires_grad(bi)) {
      Array& buf = tp.grad_buffer(bi);
      const std::size_t rows = g.size() / n;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < n; ++c) buf[c] += g[r * n + c];
    }
  });
}

Var gelu(const Var& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt2pi = 0.39894228040143267794;
  return unary(
      "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [](double v, double) { return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt2pi * std::exp(-0.5 * v * v); });
}

Var exp(const Var& x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var sigmoid(const Var& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var clamp(const Var& x, double lo, double hi) {
  return unary(
      "clamp", x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

namespace {

// Softmax over contiguous lanes: `outer` groups, each `len` values at stride
// `stride` (stride 1 for rows, `cols` for columns).
void softmax_lanes(const double* in, double* out, std::size_t outer, std::size_t len, std::size_t outer_step,
                   std::size_t stride, const char* op) {
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = in + o * outer_step;
    double* dst = out + o * outer_step;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) m = std::max(m, src[i * stride]);
    if (!std::isfinite(m)) throw NumericError(std::string(op) + ": lane has no finite entry");
    double z = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double e = std::exp(src[i * stride] - m);
      dst[i * stride] = e;
      z += e;
    }
    for (std::size_t i = 0; i < len; ++i) dst[i * stride] /= z;
  }
}

void softmax_lanes_backward(const double* y, const double* g, double* dx, std::size_t outer, std::size_t len,
                            std::size_t outer_step, std::size_t stride) {
  for (std::size_t o = 0; o < outer; ++o) {
    const double* yy = y + o * outer_step;
    const double* gg = g + o * outer_step;
    double* d = dx + o * outer_step;
    double dot = 0.0;
    for (std::size_t i = 0; i < len; ++i) dot += yy[i * stride] * gg[i * stride];
    for (std::size_t i = 0; i < len; ++i) d[i * stride] += yy[i * stride] * (gg[i * stride] - dot);
  }
}

}  // namespace

Var softmax(const Var& x, std::size_t axis) {
  require_rank2(x, "softmax");
  if (axis > 1) throw ShapeError("softmax: axis must be 0 or 1");
  Tape& t = tape_of(x);
  const std::size_t rows = x.value().rows(), cols = x.value().cols();
  Array out(x.shape());
  // axis 1: lanes are rows; axis 0: lanes are columns.
  const std::size_t outer = axis == 1 ? rows : cols;
  const std::size_t len = axis == 1 ? cols : rows;
  const std::size_t outer_step = axis == 1 ? cols : 1;
  const std::size_t stride = axis == 1 ? 1 : cols;
  softmax_lanes(x.value().raw(), out.raw(), outer, len, outer_step, stride, "softmax");
  const std::size_t xi = x.id();
  return t.record("softmax", std::move(out), {x}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    softmax_lanes_backward(tp.value(self).raw(), tp.upstream(self).raw(), tp.grad_buffer(xi).raw(), outer, len,
                           outer_step, stride);
  });
}

Var masked_softmax(const Var& x, const Array& additive_mask) {
  require_rank2(x, "masked_softmax");
  if (additive_mask.shape() != x.shape()) {
    throw ShapeError("masked_softmax: mask " + to_string(additive_mask.shape()) + " vs " + to_string(x.shape()));
  }
  Tape& t = tape_of(x);
  const std::size_t rows = x.value().rows(), cols = x.value().cols();
  Array shifted = x.value();
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += additive_mask[i];
  Array out(x.shape());
  softmax_lanes(shifted.raw(), out.raw(), rows, cols, cols, 1, "masked_softmax");
  const std::size_t xi = x.id();
  return t.record("masked_softmax", std::move(out), {x}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    softmax_lanes_backward(tp.value(self).raw(), tp.upstream(self).raw(), tp.grad_buffer(xi).raw(), rows, cols, cols, 1);
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  require_rank2(x, "layer_norm");
  const std::size_t rows = x.value().rows(), n = x.value().cols();
  if (gamma.value().size() != n || beta.value().size() != n) {
    throw ShapeError("layer_norm: affine parameters do not match width " + std::to_string(n));
  }
  Tape& t = tape_of(x);
  auto xhat = std::make_shared<Array>(x.shape());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  Array out(x.shape());
  const Array& xv = x.value();
  const Array& gv = gamma.value();
  const Array& bv = beta.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += xv.at(r, c);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double d = xv.at(r, c) - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t c = 0; c < n; ++c) {
      const double h = (xv.at(r, c) - mu) * rs;
      xhat->at(r, c) = h;
      out.at(r, c) = h * gv[c] + bv[c];
    }
  }
  const std::size_t xi = x.id(), gi = gamma.id(), bi = beta.id();
  return t.record("layer_norm", std::move(out), {x, gamma, beta}, [=](Tape& tp, std::size_t self) {
    const Array& g = tp.upstream(self);
    const Array& gv = tp.value(gi);
    if (tp.requires_grad(gi) || tp.requires_grad(bi)) {
      Array dg(gv.shape()), db(gv.shape());
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < n; ++c) {
          dg[c] += g.at(r, c) * xhat->at(r, c);
          db[c] += g.at(r, c);
        }
      accumulate(tp, gi, dg);
      accumulate(tp, bi, db);
    }
    if (!tp.requires_grad(xi)) return;
    Array& dx = tp.grad_buffer(xi);
    std::vector<double> dh(n);
    for (std::size_t r = 0; r < rows; ++r) {
      double mean_dh = 0.0, mean_dh_h = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        dh[c] = g.at(r, c) * gv[c];
        mean_dh += dh[c];
        mean_dh_h += dh[c] * xhat->at(r, c);
      }
      mean_dh /= static_cast<double>(n);
      mean_dh_h /= static_cast<double>(n);
      for (std::size_t c = 0; c < n; ++c) {
        dx.at(r, c) += (*rstd)[r] * (dh[c] - mean_dh - xhat->at(r, c) * mean_dh_h);
      }
    }
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias) {
  const Array& xv = x.value();
  const Array& wv = weight.value();
  if (xv.rank() != 3 || wv.rank() != 4) {
    throw ShapeError("conv2d: expected x[c,h,w] and w[o,c,k,k], got " + to_string(xv.shape()) + ", " +
                     to_string(wv.shape()));
  }
  const std::size_t cin = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const std::size_t cout = wv.dim(0), k = wv.dim(2);
  if (wv.dim(1) != cin || wv.dim(3) != k || k % 2 == 0) {
    throw ShapeError("conv2d: kernel " + to_string(wv.shape()) + " incompatible with input " + to_string(xv.shape()));
  }
  if (bias.value().size() != cout) throw ShapeError("conv2d: bias size mismatch");
  Tape& t = tape_of(x);
  const std::size_t pad = k / 2, hw = h * w, ck = cin * k * k;

  // Source pixel index for each (patch row, output pixel); replicate padding
  // clamps coordinates into the image.
  auto src = std::make_shared<std::vector<std::size_t>>(ck * hw);
  auto cols = std::make_shared<Array>(Shape{ck, hw});
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t di = 0; di < k; ++di)
      for (std::size_t dj = 0; dj < k; ++dj) {
        const std::size_t row = (c * k + di) * k + dj;
        for (std::size_t y = 0; y < h; ++y) {
          const auto yy = static_cast<std::size_t>(
              std::clamp<long>(static_cast<long>(y + di) - static_cast<long>(pad), 0, static_cast<long>(h) - 1));
          for (std::size_t xx0 = 0; xx0 < w; ++xx0) {
            const auto xx = static_cast<std::size_t>(std::clamp<long>(
                static_cast<long>(xx0 + dj) - static_cast<long>(pad), 0, static_cast<long>(w) - 1));
            const std::size_t s = (c * h + yy) * w + xx;
            (*src)[row * hw + y * w + xx0] = s;
            (*cols)[row * hw + y * w + xx0] = xv[s];
          }
        }
      }
  Array out({cout, h, w});
  {
    CMap wm(wv.raw(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(ck));
    MMap om(out.raw(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(hw));
    om.noalias() = wm * cmap(*cols);
    const Array& bv = bias.value();
    for (std::size_t o = 0; o < cout; ++o) om.row(static_cast<Eigen::Index>(o)).array() += bv[o];
  }
  const std::size_t xi = x.id(), wi = weight.id(), bi = bias.id();
  return t.record("conv2d", std::move(out), {x, weight, bias}, [=](Tape& tp, std::size_t self) {
    const Array& g = tp.upstream(self);
    CMap gm(g.raw(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(hw));
    if (tp.requires_grad(wi)) {
      Array& dw = tp.grad_buffer(wi);
      MMap dwm(dw.raw(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(ck));
      dwm.noalias() += gm * cmap(*cols).transpose();
    }
    if (tp.requires_grad(bi)) {
      Array& db = tp.grad_buffer(bi);
      // Plain loop: Eigen's vectorised reduction order depends on the buffer address.
      for (std::size_t o = 0; o < cout; ++o) db[o] += std::accumulate(g.raw() + o * hw, g.raw() + (o + 1) * hw, 0.0);
    }
    if (tp.requires_grad(xi)) {
      const Array& wv = tp.value(wi);
      CMap wm(wv.raw(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(ck));
      RowMat dcols = wm.transpose() * gm;
      Array& dx = tp.grad_buffer(xi);
      const double* d = dcols.data();
      for (std::size_t i = 0; i < ck * hw; ++i) dx[(*src)[i]] += d[i];
    }
  });
}

Var avg_pool(const Var& x, std::size_t axis) {
  require_rank2(x, "avg_pool");
  if (axis > 1) throw ShapeError("avg_pool: axis must be 0 or 1");
  Tape& t = tape_of(x);
  const std::size_t rows = x.value().rows(), cols = x.value().cols();
  if ((axis == 0 ? rows : cols) == 0) throw ShapeError("avg_pool: empty axis");
  const Array& xv = x.value();
  Array out(axis == 0 ? Shape{1, cols} : Shape{rows, 1});
  const double inv = 1.0 / static_cast<double>(axis == 0 ? rows : cols);
  // Running mean, so a constant axis pools to exactly that constant.
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double k = static_cast<double>((axis == 0 ? r : c) + 1);
      double& m = out[axis == 0 ? c : r];
      m += (xv.at(r, c) - m) / k;
    }
  const std::size_t xi = x.id();
  return t.record("avg_pool", std::move(out), {x}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Array& g = tp.upstream(self);
    Array& dx = tp.grad_buffer(xi);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) dx.at(r, c) += g[axis == 0 ? c : r] * inv;
  });
}

Var row_norm(const Var& x) {
  require_rank2(x, "row_norm");
  Tape& t = tape_of(x);
  const std::size_t rows = x.value().rows(), cols = x.value().cols();
  const Array& xv = x.value();
  Array out({rows, 1});
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += xv.at(r, c) * xv.at(r, c);
    out[r] = std::sqrt(s);
  }
  const std::size_t xi = x.id();
  return t.record("row_norm", std::move(out), {x}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Array& g = tp.upstream(self);
    const Array& y = tp.value(self);
    const Array& xv = tp.value(xi);
    Array& dx = tp.grad_buffer(xi);
    for (std::size_t r = 0; r < rows; ++r) {
      if (y[r] == 0.0) continue;  // subgradient 0 at the origin
      const double f = g[r] / y[r];
      for (std::size_t c = 0; c < cols; ++c) dx.at(r, c) += f * xv.at(r, c);
    }
  });
}

Var sum(const Var& x) {
  Tape& t = tape_of(x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t xi = x.id();
  return t.record("sum", Array({1}, {s}), {x}, [xi](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const double g = tp.upstream(self)[0];
    for (double& d : tp.grad_buffer(xi).data()) d += g;
  });
}

Var mean(const Var& x) {
  if (x.value().empty()) throw ShapeError("mean: empty input");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var reshape(const Var& x, Shape shape) {
  Tape& t = tape_of(x);
  Array out = x.value().reshaped(std::move(shape));
  const std::size_t xi = x.id();
  return t.record("reshape", std::move(out), {x}, [xi](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Array& g = tp.upstream(self);
    Array& dx = tp.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
  });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_rank2(p, "concat");
  Tape& t = tape_of(parts.front());
  const std::size_t other = axis == 0 ? parts.front().value().cols() : parts.front().value().rows();
  std::size_t total = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    const std::size_t o = axis == 0 ? p.value().cols() : p.value().rows();
    if (o != other) throw ShapeError("concat: mismatched extent " + to_string(p.shape()));
    offsets.push_back(total);
    total += axis == 0 ? p.value().rows() : p.value().cols();
  }
  Array out(axis == 0 ? Shape{total, other} : Shape{other, total});
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Array& pv = parts[k].value();
    ids.push_back(parts[k].id());
    for (std::size_t r = 0; r < pv.rows(); ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) {
        if (axis == 0) out.at(offsets[k] + r, c) = pv.at(r, c);
        else out.at(r, offsets[k] + c) = pv.at(r, c);
      }
  }
  return t.record("concat", std::move(out), parts, [=](Tape& tp, std::size_t self) {
    const Array& g = tp.upstream(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Array& d = tp.grad_buffer(ids[k]);
      for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c) d.at(r, c) += axis == 0 ? g.at(offsets[k] + r, c) : g.at(r, offsets[k] + c);
    }
  });
}

Var gather_rows(const Var& x, const std::vector<std::size_t>& rows) {
  require_rank2(x, "gather_rows");
  Tape& t = tape_of(x);
  const std::size_t n = x.value().rows(), cols = x.value().cols();
  Array out({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n) throw ShapeError("gather_rows: index " + std::to_string(rows[i]) + " out of " + std::to_string(n));
    std::copy_n(x.value().raw() + rows[i] * cols, cols, out.raw() + i * cols);
  }
  const std::size_t xi = x.id();
  return t.record("gather_rows", std::move(out), {x}, [xi, rows, cols](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Array& g = tp.upstream(self);
    Array& dx = tp.grad_buffer(xi);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t c = 0; c < cols; ++c) dx[rows[i] * cols + c] += g[i * cols + c];
  });
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_rows");
  if (begin > end || end > x.value().rows()) throw ShapeError("slice_rows: bad range");
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
  return gather_rows(x, idx);
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_cols");
  const std::size_t rows = x.value().rows(), cols = x.value().cols();
  if (begin > end || end > cols) throw ShapeError("slice_cols: bad range");
  Tape& t = tape_of(x);
  const std::size_t w = end - begin;
  Array out({rows, w});
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x.value().raw() + r * cols + begin, w, out.raw() + r * w);
  const std::size_t xi = x.id();
  return t.record("slice_cols", std::move(out), {x}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Array& g = tp.upstream(self);
    Array& dx = tp.grad_buffer(xi);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) dx[r * cols + begin + c] += g[r * w + c];
  });
}

Var focal_loss(const Var& p, const Array& target, double alpha, double beta) {
  if (p.value().size() != target.size()) {
    throw ShapeError("focal_loss: prediction " + to_string(p.shape()) + " vs target " + to_string(target.shape()));
  }
  Tape& t = tape_of(p);
  const Array& pv = p.value();
  std::size_t positives = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (!(pv[i] > 0.0 && pv[i] < 1.0)) throw NumericError("focal_loss: probability outside (0,1)");
    if (target[i] == 1.0) ++positives;
  }
  const double norm = 1.0 / static_cast<double>(std::max<std::size_t>(1, positives));
  double loss = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double q = pv[i], y = target[i];
    if (y == 1.0) loss -= std::pow(1.0 - q, alpha) * std::log(q);
    else loss -= std::pow(1.0 - y, beta) * std::pow(q, alpha) * std::log(1.0 - q);
  }
  const std::size_t pi = p.id();
  return t.record("focal_loss", Array({1}, {loss * norm}), {p}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(pi)) return;
    const double g = tp.upstream(self)[0] * norm;
    const Array& pv = tp.value(pi);
    Array& dp = tp.grad_buffer(pi);
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double q = pv[i], y = target[i];
      double d;
      if (y == 1.0) {
        d = alpha * std::pow(1.0 - q, alpha - 1.0) * std::log(q) - std::pow(1.0 - q, alpha) / q;
      } else {
        const double w = std::pow(1.0 - y, beta);
        d = -w * (alpha * std::pow(q, alpha - 1.0) * std::log(1.0 - q) - std::pow(q, alpha) / (1.0 - q));
      }
      dp[i] += g * d;
    }
  });
}

Var l1_loss(const Var& pred, const Array& target) {
  if (pred.value().size() != target.size() || target.empty()) {
    throw ShapeError("l1_loss: prediction " + to_string(pred.shape()) + " vs target " + to_string(target.shape()));
  }
  Tape& t = tape_of(pred);
  const Array& pv = pred.value();
  double s = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) s += std::abs(pv[i] - target[i]);
  const double inv = 1.0 / static_cast<double>(pv.size());
  const std::size_t pi = pred.id();
  return t.record("l1_loss", Array({1}, {s * inv}), {pred}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(pi)) return;
    const double g = tp.upstream(self)[0] * inv;
    const Array& pv = tp.value(pi);
    Array& dp = tp.grad_buffer(pi);
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double d = pv[i] - target[i];
      dp[i] += d > 0 ? g : (d < 0 ? -g : 0.0);
    }
  });
}

Var giou_loss(const Var& pred_xyxy, const Array& target_xyxy) {
  if (pred_xyxy.value().size() != 4 || target_xyxy.size() != 4) throw ShapeError("giou_loss: boxes need 4 coordinates");
  const double a1 = target_xyxy[0], b1 = target_xyxy[1], a2 = target_xyxy[2], b2 = target_xyxy[3];
  if (!(a2 > a1 && b2 > b1)) throw std::invalid_argument("giou_loss: degenerate target box");
  Tape& t = tape_of(pred_xyxy);
  const Array& p = pred_xyxy.value();
  const double x1 = p[0], y1 = p[1], x2 = p[2], y2 = p[3];
  if (!(x2 > x1 && y2 > y1)) throw std::invalid_argument("giou_loss: degenerate predicted box");
  const double ap = (x2 - x1) * (y2 - y1), ag = (a2 - a1) * (b2 - b1);
  const double iw = std::max(0.0, std::min(x2, a2) - std::max(x1, a1));
  const double ih = std::max(0.0, std::min(y2, b2) - std::max(y1, b1));
  const double inter = iw * ih, uni = ap + ag - inter;
  const double cw = std::max(x2, a2) - std::min(x1, a1), ch = std::max(y2, b2) - std::min(y1, b1);
  const double carea = cw * ch;
  const double giou = inter / uni - (carea - uni) / carea;
  const std::size_t pi = pred_xyxy.id();
  return t.record("giou_loss", Array({1}, {1.0 - giou}), {pred_xyxy}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(pi)) return;
    const double g = tp.upstream(self)[0];
    // L = 2 - I/U - U/C with U = Ap + Ag - I.
    const double dl_di = -(uni + inter) / (uni * uni) + 1.0 / carea;
    const double dl_dap = inter / (uni * uni) - 1.0 / carea;
    const double dl_dc = uni / (carea * carea);
    double d[4] = {0, 0, 0, 0};
    d[0] += dl_dap * -(y2 - y1);
    d[2] += dl_dap * (y2 - y1);
    d[1] += dl_dap * -(x2 - x1);
    d[3] += dl_dap * (x2 - x1);
    if (iw > 0 && ih > 0) {
      if (x1 > a1) d[0] += dl_di * -ih;
      if (x2 < a2) d[2] += dl_di * ih;
      if (y1 > b1) d[1] += dl_di * -iw;
      if (y2 < b2) d[3] += dl_di * iw;
    }
    if (x1 < a1) d[0] += dl_dc * -ch;
    if (x2 > a2) d[2] += dl_dc * ch;
    if (y1 < b1) d[1] += dl_dc * -cw;
    if (y2 > b2) d[3] += dl_dc * cw;
    Array& dp = tp.grad_buffer(pi);
    for (int i = 0; i < 4; ++i) dp[static_cast<std::size_t>(i)] += g * d[i];
  });
}

}  // namespace untrack::num
