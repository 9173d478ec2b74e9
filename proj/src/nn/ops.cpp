#include "ual/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "ual/errors.hpp"

namespace ual::nn {
namespace {

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

void require_same(const Tensor &a, const Tensor &b, const char *op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
}

void require_rank(const Tensor &t, std::size_t rank, const char *op) {
  if (t.rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_str(t.shape()));
}

// col [C*k*k, OH*OW] from img [C,H,W].
void im2col(const Real *img, int C, int H, int W, int k, int stride, int pad, int OH, int OW,
            Real *col) {
  const int plane = OH * OW;
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        Real *dst = col + static_cast<std::size_t>((c * k + ky) * k + kx) * plane;
        const Real *src = img + static_cast<std::size_t>(c) * H * W;
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * stride - pad + ky;
          Real *row = dst + static_cast<std::size_t>(oy) * OW;
          if (iy < 0 || iy >= H) {
            std::fill(row, row + OW, Real(0));
            continue;
          }
          const Real *srow = src + static_cast<std::size_t>(iy) * W;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix = ox * stride - pad + kx;
            row[ox] = (ix >= 0 && ix < W) ? srow[ix] : Real(0);
          }
        }
      }
}

// Adjoint of im2col: accumulates col into img.
void col2im(const Real *col, int C, int H, int W, int k, int stride, int pad, int OH, int OW,
            Real *img) {
  const int plane = OH * OW;
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const Real *src = col + static_cast<std::size_t>((c * k + ky) * k + kx) * plane;
        Real *dst = img + static_cast<std::size_t>(c) * H * W;
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H)
            continue;
          const Real *srow = src + static_cast<std::size_t>(oy) * OW;
          Real *drow = dst + static_cast<std::size_t>(iy) * W;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < W)
              drow[ix] += srow[ox];
          }
        }
      }
}

template <class F, class G>
Tensor unary(const Tensor &x, F forward, G derivative_from_output) {
  std::vector<Real> out(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = forward(xv[i]);
  Node *xn = x.node();
  return make_result(x.shape(), std::move(out), {x}, [xn, derivative_from_output](Node &self) {
    if (!xn->requires_grad)
      return;
    auto &g = xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * derivative_from_output(self.value[i], xn->value[i]);
  });
}

} // namespace

Tensor add(const Tensor &a, const Tensor &b) {
  require_same(a, b, "add");
  std::vector<Real> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] + b.values()[i];
  Node *an = a.node(), *bn = b.node();
  return make_result(a.shape(), std::move(out), {a, b}, [an, bn](Node &self) {
    for (Node *n : {an, bn})
      if (n->requires_grad) {
        auto &g = n->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i)
          g[i] += self.grad[i];
      }
  });
}

Tensor sub(const Tensor &a, const Tensor &b) { return add(a, scale(b, Real(-1))); }

Tensor mul(const Tensor &a, const Tensor &b) {
  require_same(a, b, "mul");
  std::vector<Real> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] * b.values()[i];
  Node *an = a.node(), *bn = b.node();
  return make_result(a.shape(), std::move(out), {a, b}, [an, bn](Node &self) {
    if (an->requires_grad) {
      auto &g = an->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      auto &g = bn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += self.grad[i] * an->value[i];
    }
  });
}

Tensor scale(const Tensor &a, Real s) {
  return unary(a, [s](Real v) { return s * v; }, [s](Real, Real) { return s; });
}

Tensor relu(const Tensor &x) {
  return unary(x, [](Real v) { return v < 0 ? Real(0) : v; },
               [](Real, Real in) { return in > 0 ? Real(1) : Real(0); });
}

Tensor tanh(const Tensor &x) {
  return unary(x, [](Real v) { return std::tanh(v); },
               [](Real out, Real) { return Real(1) - out * out; });
}

Tensor sigmoid(const Tensor &x) {
  return unary(x, [](Real v) { return Real(1) / (Real(1) + std::exp(-v)); },
               [](Real out, Real) { return out * (Real(1) - out); });
}

Tensor sum(const Tensor &x) {
  double acc = 0.0;
  for (Real v : x.values())
    acc += v;
  Node *xn = x.node();
  return make_result({1}, {static_cast<Real>(acc)}, {x}, [xn](Node &self) {
    auto &g = xn->ensure_grad();
    for (auto &v : g)
      v += self.grad[0];
  });
}

Tensor mean(const Tensor &x) { return scale(sum(x), Real(1) / static_cast<Real>(x.size())); }

Tensor conv2d(const Tensor &x, const Tensor &w, const Tensor &bias, int pad) {
  require_rank(x, 4, "conv2d input");
  require_rank(w, 4, "conv2d weight");
  const int N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = w.dim(0), k = w.dim(2);
  if (w.dim(1) != Ci || w.dim(3) != k)
    throw DimensionError("conv2d: weight " + shape_str(w.shape()) + " vs input " +
                         shape_str(x.shape()));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != Co))
    throw DimensionError("conv2d: bias " + shape_str(bias.shape()));
  const int OH = H + 2 * pad - k + 1, OW = W + 2 * pad - k + 1;
  if (OH <= 0 || OW <= 0)
    throw DimensionError("conv2d: input " + shape_str(x.shape()) + " smaller than kernel");
  const int K = Ci * k * k, P = OH * OW;
  const bool direct = (k == 1 && pad == 0);

  std::vector<Real> out(static_cast<std::size_t>(N) * Co * P);
  std::vector<Real> cols;
  if (!direct)
    cols.resize(static_cast<std::size_t>(N) * K * P);
  ConstMatMap wm(w.values().data(), Co, K);
  for (int n = 0; n < N; ++n) {
    const Real *img = x.values().data() + static_cast<std::size_t>(n) * Ci * H * W;
    const Real *colp = img;
    if (!direct) {
      Real *c = cols.data() + static_cast<std::size_t>(n) * K * P;
      im2col(img, Ci, H, W, k, 1, pad, OH, OW, c);
      colp = c;
    }
    MatMap om(out.data() + static_cast<std::size_t>(n) * Co * P, Co, P);
    om.noalias() = wm * ConstMatMap(colp, K, P);
    if (bias.defined())
      om.colwise() += Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, 1>>(
          bias.values().data(), Co);
  }

  Node *xn = x.node(), *wn = w.node(), *bn = bias.defined() ? bias.node() : nullptr;
  return make_result(
      {N, Co, OH, OW}, std::move(out), {x, w, bias},
      [=, cols = std::move(cols)](Node &self) {
        ConstMatMap wmb(wn->value.data(), Co, K);
        std::vector<Real> dcol;
        if (!direct && xn->requires_grad)
          dcol.resize(static_cast<std::size_t>(K) * P);
        for (int n = 0; n < N; ++n) {
          ConstMatMap go(self.grad.data() + static_cast<std::size_t>(n) * Co * P, Co, P);
          const Real *colp = direct ? xn->value.data() + static_cast<std::size_t>(n) * Ci * H * W
                                    : cols.data() + static_cast<std::size_t>(n) * K * P;
          if (wn->requires_grad) {
            MatMap gw(wn->ensure_grad().data(), Co, K);
            gw.noalias() += go * ConstMatMap(colp, K, P).transpose();
          }
          if (bn && bn->requires_grad) {
            // plain loops: Eigen reductions vary with buffer alignment
            auto &gb = bn->ensure_grad();
            const Real *gp = self.grad.data() + static_cast<std::size_t>(n) * Co * P;
            for (int c = 0; c < Co; ++c) {
              Real acc = 0;
              for (int i = 0; i < P; ++i)
                acc += gp[static_cast<std::size_t>(c) * P + i];
              gb[c] += acc;
            }
          }
          if (xn->requires_grad) {
            Real *gx = xn->ensure_grad().data() + static_cast<std::size_t>(n) * Ci * H * W;
            if (direct) {
              MatMap(gx, K, P).noalias() += wmb.transpose() * go;
            } else {
              MatMap(dcol.data(), K, P).noalias() = wmb.transpose() * go;
              col2im(dcol.data(), Ci, H, W, k, 1, pad, OH, OW, gx);
            }
          }
        }
      });
}

Tensor conv_transpose2d(const Tensor &x, const Tensor &w, const Tensor &bias, int stride,
                        int pad, int output_pad) {
  require_rank(x, 4, "conv_transpose2d input");
  require_rank(w, 4, "conv_transpose2d weight");
  const int N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = w.dim(1), k = w.dim(2);
  if (w.dim(0) != Ci || w.dim(3) != k)
    throw DimensionError("conv_transpose2d: weight " + shape_str(w.shape()) + " vs input " +
                         shape_str(x.shape()));
  const int OH = (H - 1) * stride - 2 * pad + k + output_pad;
  const int OW = (W - 1) * stride - 2 * pad + k + output_pad;
  const int K = Co * k * k, P = H * W;

  // The forward pass is the adjoint of a strided conv from [Co,OH,OW] to [Ci,H,W].
  std::vector<Real> out(static_cast<std::size_t>(N) * Co * OH * OW, Real(0));
  std::vector<Real> col(static_cast<std::size_t>(K) * P);
  ConstMatMap wm(w.values().data(), Ci, K);
  for (int n = 0; n < N; ++n) {
    ConstMatMap xm(x.values().data() + static_cast<std::size_t>(n) * Ci * P, Ci, P);
    MatMap(col.data(), K, P).noalias() = wm.transpose() * xm;
    Real *o = out.data() + static_cast<std::size_t>(n) * Co * OH * OW;
    col2im(col.data(), Co, OH, OW, k, stride, pad, H, W, o);
    if (bias.defined())
      for (int c = 0; c < Co; ++c) {
        const Real b = bias.values()[c];
        Real *plane = o + static_cast<std::size_t>(c) * OH * OW;
        for (int i = 0; i < OH * OW; ++i)
          plane[i] += b;
      }
  }

  Node *xn = x.node(), *wn = w.node(), *bn = bias.defined() ? bias.node() : nullptr;
  return make_result({N, Co, OH, OW}, std::move(out), {x, w, bias}, [=](Node &self) {
    ConstMatMap wmb(wn->value.data(), Ci, K);
    std::vector<Real> dcol(static_cast<std::size_t>(K) * P);
    for (int n = 0; n < N; ++n) {
      const Real *go = self.grad.data() + static_cast<std::size_t>(n) * Co * OH * OW;
      im2col(go, Co, OH, OW, k, stride, pad, H, W, dcol.data());
      ConstMatMap dc(dcol.data(), K, P);
      if (xn->requires_grad) {
        MatMap gx(xn->ensure_grad().data() + static_cast<std::size_t>(n) * Ci * P, Ci, P);
        gx.noalias() += wmb * dc;
      }
      if (wn->requires_grad) {
        ConstMatMap xm(xn->value.data() + static_cast<std::size_t>(n) * Ci * P, Ci, P);
        MatMap(wn->ensure_grad().data(), Ci, K).noalias() += xm * dc.transpose();
      }
      if (bn && bn->requires_grad) {
        auto &gb = bn->ensure_grad();
        for (int c = 0; c < Co; ++c) {
          double acc = 0.0;
          const Real *plane = go + static_cast<std::size_t>(c) * OH * OW;
          for (int i = 0; i < OH * OW; ++i)
            acc += plane[i];
          gb[c] += static_cast<Real>(acc);
        }
      }
    }
  });
}

Tensor max_pool2(const Tensor &x) {
  require_rank(x, 4, "max_pool2");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 || W % 2)
    throw DimensionError("max_pool2: odd spatial size " + shape_str(x.shape()));
  const int OH = H / 2, OW = W / 2;
  std::vector<Real> out(static_cast<std::size_t>(N) * C * OH * OW);
  std::vector<std::uint32_t> arg(out.size());
  auto xv = x.values();
  for (int p = 0; p < N * C; ++p) {
    const std::size_t ib = static_cast<std::size_t>(p) * H * W;
    const std::size_t ob = static_cast<std::size_t>(p) * OH * OW;
    for (int oy = 0; oy < OH; ++oy)
      for (int ox = 0; ox < OW; ++ox) {
        std::size_t best = ib + static_cast<std::size_t>(2 * oy) * W + 2 * ox;
        for (std::size_t cand : {best + 1, best + W, best + W + 1})
          if (xv[cand] > xv[best])
            best = cand;
        out[ob + static_cast<std::size_t>(oy) * OW + ox] = xv[best];
        arg[ob + static_cast<std::size_t>(oy) * OW + ox] = static_cast<std::uint32_t>(best);
      }
  }
  Node *xn = x.node();
  return make_result({N, C, OH, OW}, std::move(out), {x},
                     [xn, arg = std::move(arg)](Node &self) {
                       auto &g = xn->ensure_grad();
                       for (std::size_t i = 0; i < arg.size(); ++i)
                         g[arg[i]] += self.grad[i];
                     });
}

Tensor global_avg_pool(const Tensor &x) {
  require_rank(x, 4, "global_avg_pool");
  const int N = x.dim(0), C = x.dim(1), P = x.dim(2) * x.dim(3);
  std::vector<Real> out(static_cast<std::size_t>(N) * C);
  for (int i = 0; i < N * C; ++i) {
    double acc = 0.0;
    for (int j = 0; j < P; ++j)
      acc += x.values()[static_cast<std::size_t>(i) * P + j];
    out[i] = static_cast<Real>(acc / P);
  }
  Node *xn = x.node();
  return make_result({N, C}, std::move(out), {x}, [xn, N, C, P](Node &self) {
    auto &g = xn->ensure_grad();
    for (int i = 0; i < N * C; ++i) {
      const Real d = self.grad[i] / static_cast<Real>(P);
      for (int j = 0; j < P; ++j)
        g[static_cast<std::size_t>(i) * P + j] += d;
    }
  });
}

Tensor linear(const Tensor &x, const Tensor &w, const Tensor &bias) {
  require_rank(x, 2, "linear input");
  require_rank(w, 2, "linear weight");
  const int N = x.dim(0), F = x.dim(1), O = w.dim(0);
  if (w.dim(1) != F)
    throw DimensionError("linear: weight " + shape_str(w.shape()) + " vs input " +
                         shape_str(x.shape()));
  std::vector<Real> out(static_cast<std::size_t>(N) * O);
  MatMap om(out.data(), N, O);
  om.noalias() = ConstMatMap(x.values().data(), N, F) *
                 ConstMatMap(w.values().data(), O, F).transpose();
  if (bias.defined())
    om.rowwise() +=
        Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>(bias.values().data(), O);
  Node *xn = x.node(), *wn = w.node(), *bn = bias.defined() ? bias.node() : nullptr;
  return make_result({N, O}, std::move(out), {x, w, bias}, [=](Node &self) {
    ConstMatMap go(self.grad.data(), N, O);
    if (xn->requires_grad)
      MatMap(xn->ensure_grad().data(), N, F).noalias() +=
          go * ConstMatMap(wn->value.data(), O, F);
    if (wn->requires_grad)
      MatMap(wn->ensure_grad().data(), O, F).noalias() +=
          go.transpose() * ConstMatMap(xn->value.data(), N, F);
    if (bn && bn->requires_grad) {
      auto &gb = bn->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
          gb[o] += self.grad[static_cast<std::size_t>(n) * O + o];
    }
  });
}

Tensor reshape(const Tensor &x, Shape shape) {
  if (numel(shape) != x.size())
    throw DimensionError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape));
  std::vector<Real> out(x.values().begin(), x.values().end());
  Node *xn = x.node();
  return make_result(std::move(shape), std::move(out), {x}, [xn](Node &self) {
    auto &g = xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i];
  });
}

Tensor concat(const std::vector<Tensor> &parts) {
  if (parts.empty())
    throw DimensionError("concat: no inputs");
  const Shape &s0 = parts.front().shape();
  const int N = s0.at(0);
  std::size_t inner = 1;
  for (std::size_t d = 2; d < s0.size(); ++d)
    inner *= static_cast<std::size_t>(s0[d]);
  int total = 0;
  for (const auto &p : parts) {
    const Shape &s = p.shape();
    bool ok = s.size() == s0.size() && s[0] == N;
    for (std::size_t d = 2; ok && d < s.size(); ++d)
      ok = s[d] == s0[d];
    if (!ok)
      throw DimensionError("concat: " + shape_str(s) + " incompatible with " + shape_str(s0));
    total += s[1];
  }
  Shape out_shape = s0;
  out_shape[1] = total;
  std::vector<Real> out(numel(out_shape));
  const std::size_t row = static_cast<std::size_t>(total) * inner;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto &p : parts) {
    offsets.push_back(off);
    const std::size_t len = static_cast<std::size_t>(p.dim(1)) * inner;
    for (int n = 0; n < N; ++n)
      std::copy_n(p.values().data() + n * len, len, out.data() + n * row + off);
    off += len;
  }
  std::vector<Node *> nodes;
  for (const auto &p : parts)
    nodes.push_back(p.node());
  return make_result(std::move(out_shape), std::move(out), parts,
                     [nodes, offsets, N, row, inner](Node &self) {
                       for (std::size_t k = 0; k < nodes.size(); ++k) {
                         Node *p = nodes[k];
                         if (!p->requires_grad)
                           continue;
                         auto &g = p->ensure_grad();
                         const std::size_t len = static_cast<std::size_t>(p->shape[1]) * inner;
                         for (int n = 0; n < N; ++n)
                           for (std::size_t i = 0; i < len; ++i)
                             g[n * len + i] += self.grad[n * row + offsets[k] + i];
                       }
                     });
}

Tensor slice(const Tensor &x, int begin, int end) {
  const Shape &s = x.shape();
  if (s.size() < 2 || begin < 0 || end > s[1] || begin >= end)
    throw DimensionError("slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") of " + shape_str(s));
  std::size_t inner = 1;
  for (std::size_t d = 2; d < s.size(); ++d)
    inner *= static_cast<std::size_t>(s[d]);
  const int N = s[0];
  const std::size_t row = static_cast<std::size_t>(s[1]) * inner;
  const std::size_t len = static_cast<std::size_t>(end - begin) * inner;
  const std::size_t off = static_cast<std::size_t>(begin) * inner;
  Shape out_shape = s;
  out_shape[1] = end - begin;
  std::vector<Real> out(static_cast<std::size_t>(N) * len);
  for (int n = 0; n < N; ++n)
    std::copy_n(x.values().data() + n * row + off, len, out.data() + n * len);
  Node *xn = x.node();
  return make_result(std::move(out_shape), std::move(out), {x},
                     [xn, N, row, len, off](Node &self) {
                       auto &g = xn->ensure_grad();
                       for (int n = 0; n < N; ++n)
                         for (std::size_t i = 0; i < len; ++i)
                           g[n * row + off + i] += self.grad[n * len + i];
                     });
}

Tensor resize_bilinear(const Tensor &x, int out_h, int out_w) {
  require_rank(x, 4, "resize_bilinear");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  struct Tap {
    int i0, i1;
    Real f;
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> t(out);
    const double ratio = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      double src = std::max(0.0, (o + 0.5) * ratio - 0.5);
      int i0 = std::min(static_cast<int>(src), in - 1);
      int i1 = std::min(i0 + 1, in - 1);
      t[o] = {i0, i1, static_cast<Real>(src - i0)};
    }
    return t;
  };
  auto ty = taps(H, out_h), tx = taps(W, out_w);
  std::vector<Real> out(static_cast<std::size_t>(N) * C * out_h * out_w);
  auto xv = x.values();
  for (int p = 0; p < N * C; ++p) {
    const Real *src = xv.data() + static_cast<std::size_t>(p) * H * W;
    Real *dst = out.data() + static_cast<std::size_t>(p) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy)
      for (int ox = 0; ox < out_w; ++ox) {
        const auto [y0, y1, fy] = ty[oy];
        const auto [x0, x1, fx] = tx[ox];
        dst[oy * out_w + ox] = (1 - fy) * ((1 - fx) * src[y0 * W + x0] + fx * src[y0 * W + x1]) +
                               fy * ((1 - fx) * src[y1 * W + x0] + fx * src[y1 * W + x1]);
      }
  }
  Node *xn = x.node();
  return make_result({N, C, out_h, out_w}, std::move(out), {x},
                     [=](Node &self) {
                       auto &g = xn->ensure_grad();
                       for (int p = 0; p < N * C; ++p) {
                         Real *dst = g.data() + static_cast<std::size_t>(p) * H * W;
                         const Real *go = self.grad.data() + static_cast<std::size_t>(p) * out_h * out_w;
                         for (int oy = 0; oy < out_h; ++oy)
                           for (int ox = 0; ox < out_w; ++ox) {
                             const auto [y0, y1, fy] = ty[oy];
                             const auto [x0, x1, fx] = tx[ox];
                             const Real v = go[oy * out_w + ox];
                             dst[y0 * W + x0] += (1 - fy) * (1 - fx) * v;
                             dst[y0 * W + x1] += (1 - fy) * fx * v;
                             dst[y1 * W + x0] += fy * (1 - fx) * v;
                             dst[y1 * W + x1] += fy * fx * v;
                           }
                       }
                     });
}

} // namespace ual::nn
