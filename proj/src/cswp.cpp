#include "ual/cswp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>

#include "ual/errors.hpp"

namespace ual::cswp {
namespace {

using nn::Real;

void warn_clamped(double side) {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true))
    std::cerr << "warning: cswp window side " << side << " exceeds " << kCanvasSize
              << ", clamped\n";
}

void require_center_inside(const BoxTuple &box, int h, int w) {
  if (!(box.cx >= 0.0 && box.cx <= w && box.cy >= 0.0 && box.cy <= h))
    throw DomainError("cswp: box centre (" + std::to_string(box.cx) + ", " +
                      std::to_string(box.cy) + ") outside the image");
}

Real logistic(Real v) { return Real(1) / (Real(1) + std::exp(-v)); }

} // namespace

WindowGeometry window_geometry(const BoxTuple &box) {
  WindowGeometry g;
  long side = round_half_up(box.side);
  if (side > kCanvasSize) {
    g.clamped = true;
    side = kCanvasSize;
  }
  g.side = static_cast<int>(std::max(1L, side));
  g.origin_col = round_half_up(box.cx - g.side / 2.0);
  g.origin_row = round_half_up(box.cy - g.side / 2.0);
  g.canvas_start = (kCanvasSize - g.side) / 2;
  return g;
}

IntegrationCanvas integrate(const Grid &mask, const BoxTuple &box) {
  for (float v : mask.values)
    if (v != 0.0F && v != 1.0F)
      throw DomainError("cswp integrate: mask holds non-binary value " + std::to_string(v));
  require_center_inside(box, mask.height, mask.width);
  const auto g = window_geometry(box);
  if (g.clamped)
    warn_clamped(box.side);
  IntegrationCanvas out;
  out.values = Grid(kCanvasSize, kCanvasSize, kPadValue);
  out.cx = box.cx;
  out.cy = box.cy;
  out.side = g.side;
  for (int u = 0; u < g.side; ++u)
    for (int v = 0; v < g.side; ++v) {
      const long r = g.origin_row + u, c = g.origin_col + v;
      const bool inside = r >= 0 && r < mask.height && c >= 0 && c < mask.width;
      out.values.at(g.canvas_start + u, g.canvas_start + v) =
          inside ? mask.at(static_cast<int>(r), static_cast<int>(c)) : 0.0F;
    }
  return out;
}

nn::Tensor integrate_soft(const nn::Tensor &probs, const nn::Tensor &boxes,
                          const SoftOptions &options) {
  if (probs.rank() != 4 || probs.dim(1) != 1)
    throw DimensionError("integrate_soft: probs must be [N,1,H,W], got " +
                         nn::shape_str(probs.shape()));
  if (boxes.rank() != 2 || boxes.dim(1) != 3 || boxes.dim(0) != probs.dim(0))
    throw DimensionError("integrate_soft: boxes must be [N,3], got " +
                         nn::shape_str(boxes.shape()));
  const int N = probs.dim(0), H = probs.dim(2), W = probs.dim(3);
  constexpr int S = kCanvasSize;
  constexpr std::size_t plane = static_cast<std::size_t>(S) * S;
  const std::size_t img = static_cast<std::size_t>(H) * W;
  auto pv = probs.values();
  auto bv = boxes.values();
  std::vector<Real> out(N * plane);

  auto pixel = [&](int n, long r, long c) -> Real {
    if (r < 0 || r >= H || c < 0 || c >= W)
      return Real(0);
    return pv[n * img + static_cast<std::size_t>(r) * W + c];
  };

  if (options.mode == WindowMode::Hard) {
    std::vector<long> src(N * plane, -1); // flat probs index per canvas cell, -1 if none
    for (int n = 0; n < N; ++n) {
      BoxTuple box{bv[3 * n], bv[3 * n + 1], bv[3 * n + 2]};
      const auto g = window_geometry(box);
      if (g.clamped)
        warn_clamped(box.side);
      Real *o = out.data() + n * plane;
      std::fill(o, o + plane, static_cast<Real>(kPadValue));
      for (int u = 0; u < g.side; ++u)
        for (int v = 0; v < g.side; ++v) {
          const long r = g.origin_row + u, c = g.origin_col + v;
          const std::size_t cell =
              static_cast<std::size_t>(g.canvas_start + u) * S + g.canvas_start + v;
          o[cell] = pixel(n, r, c);
          if (r >= 0 && r < H && c >= 0 && c < W)
            src[n * plane + cell] = static_cast<long>(n * img + r * W + c);
        }
    }
    nn::Node *pn = probs.node();
    return nn::make_result({N, 1, S, S}, std::move(out), {probs, boxes},
                           [pn, src = std::move(src)](nn::Node &self) {
                             if (!pn->requires_grad)
                               return;
                             auto &g = pn->ensure_grad();
                             for (std::size_t i = 0; i < src.size(); ++i)
                               if (src[i] >= 0)
                                 g[src[i]] += self.grad[i];
                           });
  }

  // Soft window. Canvas cell (u, v) samples image position
  // (cy - S/2 + u, cx - S/2 + v) and is blended toward 2 by the window weight.
  const Real k = static_cast<Real>(options.sharpness);
  struct Axis {
    std::vector<Real> w, dw_ds; // window weight along this axis and its side derivative
  };
  std::vector<Axis> axes(N);
  std::vector<char> side_clamped(N, 0);
  for (int n = 0; n < N; ++n) {
    Real s = bv[3 * n + 2];
    if (s > S) {
      warn_clamped(s);
      s = S;
      side_clamped[n] = 1;
    }
    auto &ax = axes[n];
    ax.w.resize(S);
    ax.dw_ds.resize(S);
    for (int i = 0; i < S; ++i) {
      const Real d = Real(i) + Real(0.5) - Real(S) / 2;
      const Real a = logistic(k * (d + s / 2)), b = logistic(k * (s / 2 - d));
      ax.w[i] = a * b;
      ax.dw_ds[i] = side_clamped[n] ? Real(0)
                                    : a * b * (k / 2) * ((Real(1) - a) + (Real(1) - b));
    }
  }
  for (int n = 0; n < N; ++n) {
    const Real cx = bv[3 * n], cy = bv[3 * n + 1];
    for (int u = 0; u < S; ++u) {
      const Real y = cy - Real(S) / 2 + u;
      const long y0 = static_cast<long>(std::floor(y));
      const Real fy = y - y0;
      for (int v = 0; v < S; ++v) {
        const Real x = cx - Real(S) / 2 + v;
        const long x0 = static_cast<long>(std::floor(x));
        const Real fx = x - x0;
        const Real content =
            (1 - fy) * ((1 - fx) * pixel(n, y0, x0) + fx * pixel(n, y0, x0 + 1)) +
            fy * ((1 - fx) * pixel(n, y0 + 1, x0) + fx * pixel(n, y0 + 1, x0 + 1));
        const Real wgt = axes[n].w[u] * axes[n].w[v];
        out[n * plane + static_cast<std::size_t>(u) * S + v] =
            wgt * content + (1 - wgt) * static_cast<Real>(kPadValue);
      }
    }
  }

  nn::Node *pn = probs.node(), *bn = boxes.node();
  return nn::make_result(
      {N, 1, S, S}, std::move(out), {probs, boxes},
      [=, axes = std::move(axes)](nn::Node &self) {
        const auto &p = pn->value;
        auto px = [&](int n, long r, long c) -> Real {
          if (r < 0 || r >= H || c < 0 || c >= W)
            return Real(0);
          return p[n * img + static_cast<std::size_t>(r) * W + c];
        };
        std::vector<Real> *gp = pn->requires_grad ? &pn->ensure_grad() : nullptr;
        std::vector<Real> *gb = bn->requires_grad ? &bn->ensure_grad() : nullptr;
        auto scatter = [&](int n, long r, long c, Real v) {
          if (r >= 0 && r < H && c >= 0 && c < W)
            (*gp)[n * img + static_cast<std::size_t>(r) * W + c] += v;
        };
        for (int n = 0; n < N; ++n) {
          const Real cx = bn->value[3 * n], cy = bn->value[3 * n + 1];
          double dcx = 0, dcy = 0, ds = 0;
          for (int u = 0; u < S; ++u) {
            const Real y = cy - Real(S) / 2 + u;
            const long y0 = static_cast<long>(std::floor(y));
            const Real fy = y - y0;
            for (int v = 0; v < S; ++v) {
              const Real go = self.grad[n * plane + static_cast<std::size_t>(u) * S + v];
              if (go == 0)
                continue;
              const Real x = cx - Real(S) / 2 + v;
              const long x0 = static_cast<long>(std::floor(x));
              const Real fx = x - x0;
              const Real p00 = px(n, y0, x0), p01 = px(n, y0, x0 + 1);
              const Real p10 = px(n, y0 + 1, x0), p11 = px(n, y0 + 1, x0 + 1);
              const Real wu = axes[n].w[u], wv = axes[n].w[v];
              const Real wgt = wu * wv;
              if (gp) {
                const Real g = go * wgt;
                scatter(n, y0, x0, g * (1 - fy) * (1 - fx));
                scatter(n, y0, x0 + 1, g * (1 - fy) * fx);
                scatter(n, y0 + 1, x0, g * fy * (1 - fx));
                scatter(n, y0 + 1, x0 + 1, g * fy * fx);
              }
              if (gb) {
                const Real content =
                    (1 - fy) * ((1 - fx) * p00 + fx * p01) + fy * ((1 - fx) * p10 + fx * p11);
                dcx += go * wgt * ((1 - fy) * (p01 - p00) + fy * (p11 - p10));
                dcy += go * wgt * ((1 - fx) * (p10 - p00) + fx * (p11 - p01));
                const Real dw = axes[n].dw_ds[u] * wv + wu * axes[n].dw_ds[v];
                ds += go * (content - static_cast<Real>(kPadValue)) * dw;
              }
            }
          }
          if (gb) {
            (*gb)[3 * n] += static_cast<Real>(dcx);
            (*gb)[3 * n + 1] += static_cast<Real>(dcy);
            (*gb)[3 * n + 2] += static_cast<Real>(ds);
          }
        }
      });
}

Grid integrate_soft(const Grid &probs, const BoxTuple &box, const SoftOptions &options) {
  for (float v : probs.values)
    if (!(v >= 0.0F && v <= 1.0F))
      throw DomainError("integrate_soft: probability " + std::to_string(v) +
                        " outside [0,1]");
  require_center_inside(box, probs.height, probs.width);
  std::vector<Real> pv(probs.values.begin(), probs.values.end());
  auto p = nn::Tensor::from({1, 1, probs.height, probs.width}, std::move(pv));
  auto b = nn::Tensor::from({1, 3}, {static_cast<Real>(box.cx), static_cast<Real>(box.cy),
                                     static_cast<Real>(box.side)});
  auto canvas = integrate_soft(p, b, options);
  Grid out(kCanvasSize, kCanvasSize);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values[i] = static_cast<float>(canvas.values()[i]);
  return out;
}

} // namespace ual::cswp
