#include "ual/heads.hpp"

#include <algorithm>
#include <cmath>

#include "ual/errors.hpp"
#include "ual/nn/ops.hpp"

namespace ual::heads {

namespace {
const double kReluGain = std::sqrt(6.0);
}

int DetPrediction::cls() const {
  return static_cast<int>(std::max_element(class_probs.begin(), class_probs.end()) -
                          class_probs.begin());
}

SegDecoder make_decoder(int base, nn::ParamList &params, std::mt19937_64 &rng) {
  SegDecoder d;
  const int widths[] = {8 * base, 8 * base, 4 * base, 2 * base, base};
  for (int k = 0; k < 4; ++k) {
    const std::string name = "dec/up" + std::to_string(k + 1);
    const int cin = widths[k], cout = widths[k + 1];
    // fan-in of a stride-2 transposed conv: each output sees ~ cin * 9 / 4 inputs
    d.up_w.push_back(params.add_uniform(name + "/w", {cin, cout, 3, 3}, std::max(1, cin * 9 / 4),
                                        rng, kReluGain));
    d.up_b.push_back(params.add_zeros(name + "/b", {cout}));
  }
  d.out_w = params.add_uniform("dec/out/w", {1, base, 1, 1}, base, rng);
  d.out_b = params.add_zeros("dec/out/b", {1});
  return d;
}

DetHead make_det_head(int base, nn::ParamList &params, std::mt19937_64 &rng) {
  DetHead h;
  h.fc1_w = params.add_uniform("det/fc1/w", {4 * base, 8 * base}, 8 * base, rng, kReluGain);
  h.fc1_b = params.add_zeros("det/fc1/b", {4 * base});
  h.fc2_w = params.add_uniform("det/fc2/w", {3 + kBoxOutputs, 4 * base}, 4 * base, rng);
  h.fc2_b = params.add_zeros("det/fc2/b", {3 + kBoxOutputs});
  return h;
}

nn::Tensor decode_seg_logits(const nn::Tensor &f_seg, const SegDecoder &p) {
  if (f_seg.rank() != 4 || f_seg.dim(1) != p.up_w.front().dim(0))
    throw DimensionError("decode_seg: expected " + std::to_string(p.up_w.front().dim(0)) +
                         " channels, got " + nn::shape_str(f_seg.shape()));
  nn::Tensor x = f_seg;
  for (std::size_t k = 0; k < p.up_w.size(); ++k)
    x = nn::relu(nn::conv_transpose2d(x, p.up_w[k], p.up_b[k], 2, 1, 1));
  return nn::conv2d(x, p.out_w, p.out_b, 0);
}

nn::Tensor square_box(const nn::Tensor &cxcywh) {
  if (cxcywh.rank() != 2 || cxcywh.dim(1) != 4)
    throw DimensionError("square_box: expected [N,4], got " + nn::shape_str(cxcywh.shape()));
  const int N = cxcywh.dim(0);
  auto in = cxcywh.values();
  std::vector<nn::Real> out(static_cast<std::size_t>(N) * 3);
  std::vector<int> pick(N);
  for (int n = 0; n < N; ++n) {
    const nn::Real *r = in.data() + 4 * n;
    out[3 * n] = r[0];
    out[3 * n + 1] = r[1];
    pick[n] = r[3] > r[2] ? 3 : 2;
    out[3 * n + 2] = r[pick[n]];
  }
  nn::Node *src = cxcywh.node();
  return nn::make_result({N, 3}, std::move(out), {cxcywh},
                         [src, pick = std::move(pick)](nn::Node &self) {
                           auto &g = src->ensure_grad();
                           for (std::size_t n = 0; n < pick.size(); ++n) {
                             g[4 * n] += self.grad[3 * n];
                             g[4 * n + 1] += self.grad[3 * n + 1];
                             g[4 * n + pick[n]] += self.grad[3 * n + 2];
                           }
                         });
}

DetOutput detect_raw(const nn::Tensor &f_dec, const DetHead &p, int height, int width) {
  if (f_dec.rank() != 4 || f_dec.dim(1) != p.fc1_w.dim(1))
    throw DimensionError("detect: expected " + std::to_string(p.fc1_w.dim(1)) +
                         " channels, got " + nn::shape_str(f_dec.shape()));
  nn::Tensor h = nn::relu(nn::linear(nn::global_avg_pool(f_dec), p.fc1_w, p.fc1_b));
  nn::Tensor z = nn::linear(h, p.fc2_w, p.fc2_b);
  for (nn::Real v : z.values())
    if (!std::isfinite(v))
      throw NumericError("detect: non-finite logits");
  DetOutput out;
  out.class_logits = nn::slice(z, 0, 3);
  const int N = z.dim(0);
  std::vector<nn::Real> extent(static_cast<std::size_t>(N) * 4);
  for (int n = 0; n < N; ++n) {
    extent[4 * n] = static_cast<nn::Real>(width);
    extent[4 * n + 1] = static_cast<nn::Real>(height);
    extent[4 * n + 2] = static_cast<nn::Real>(width);
    extent[4 * n + 3] = static_cast<nn::Real>(height);
  }
  nn::Tensor scaled = nn::mul(nn::sigmoid(nn::slice(z, 3, 7)), nn::Tensor::from({N, 4}, extent));
  out.box = square_box(scaled);
  return out;
}

SegPrediction seg_prediction(const nn::Tensor &logits, int n) {
  const int H = logits.dim(2), W = logits.dim(3);
  SegPrediction s{Grid(H, W)};
  auto v = logits.values();
  const std::size_t off = static_cast<std::size_t>(n) * H * W;
  for (std::size_t i = 0; i < s.probs.size(); ++i)
    s.probs.values[i] = static_cast<float>(1.0 / (1.0 + std::exp(-double(v[off + i]))));
  return s;
}

BoxTuple clamp_box(const BoxTuple &box, int height, int width) {
  BoxTuple b = box;
  b.side = std::clamp(b.side, 1.0, static_cast<double>(std::min(height, width)));
  b.cx = std::clamp(b.cx, b.side / 2, width - b.side / 2);
  b.cy = std::clamp(b.cy, b.side / 2, height - b.side / 2);
  return b;
}

DetPrediction det_prediction(const DetOutput &out, int n, int height, int width) {
  DetPrediction d;
  auto z = out.class_logits.values().subspan(static_cast<std::size_t>(n) * 3, 3);
  const double zmax = std::max({double(z[0]), double(z[1]), double(z[2])});
  double denom = 0;
  for (int k = 0; k < 3; ++k)
    denom += d.class_probs[k] = std::exp(z[k] - zmax);
  for (double &p : d.class_probs)
    p /= denom;
  auto b = out.box.values().subspan(static_cast<std::size_t>(n) * 3, 3);
  d.box = clamp_box({b[0], b[1], b[2]}, height, width);
  return d;
}

SegPrediction decode_seg(const nn::Tensor &f_seg, const SegDecoder &p) {
  return seg_prediction(decode_seg_logits(f_seg, p), 0);
}

DetPrediction detect(const nn::Tensor &f_dec, const DetHead &p, int height, int width) {
  return det_prediction(detect_raw(f_dec, p, height, width), 0, height, width);
}

} // namespace ual::heads
