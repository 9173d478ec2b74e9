#include "ual/fsc.hpp"

#include <cmath>

#include "ual/errors.hpp"
#include "ual/nn/ops.hpp"

namespace ual::fsc {

namespace {

const double kReluGain = std::sqrt(6.0);

nn::Tensor conv(const nn::Tensor &x, const nn::Tensor &w, const nn::Tensor &b) {
  return nn::conv2d(x, w, b, w.dim(2) / 2);
}

void check_stacks(const std::vector<nn::Tensor> &stacks) {
  if (stacks.empty())
    throw DimensionError("fsc: no feature stacks");
  for (const auto &s : stacks)
    if (s.shape() != stacks.front().shape())
      throw DimensionError("fsc: stack shapes differ, " + nn::shape_str(s.shape()) + " vs " +
                           nn::shape_str(stacks.front().shape()));
}

nn::Tensor cat(const std::vector<nn::Tensor> &stacks) {
  return stacks.size() == 1 ? stacks.front() : nn::concat(stacks);
}

} // namespace

FscParams make_fsc(int channels, int inputs, bool has_t1, bool has_dwi, nn::ParamList &params,
                   std::mt19937_64 &rng, int kernel) {
  const int C = channels, k2 = kernel * kernel;
  FscParams p;
  p.w_a = params.add_uniform("fsc/a/w", {C, inputs * C, kernel, kernel}, inputs * C * k2, rng,
                             kReluGain);
  p.b_a = params.add_zeros("fsc/a/b", {C});
  p.w_b = params.add_uniform("fsc/b/w", {C, C, kernel, kernel}, C * k2, rng);
  p.b_b = params.add_zeros("fsc/b/b", {C});
  const int cin_c = has_t1 ? 2 * C : C;
  p.w_c = params.add_uniform("fsc/c/w", {C, cin_c, kernel, kernel}, cin_c * k2, rng, kReluGain);
  p.b_c = params.add_zeros("fsc/c/b", {C});
  const int cin_d = has_dwi ? 2 * C : C;
  p.w_d = params.add_uniform("fsc/d/w", {C, cin_d, kernel, kernel}, cin_d * k2, rng, kReluGain);
  p.b_d = params.add_zeros("fsc/d/b", {C});
  return p;
}

ConcatParams make_concat(int channels, int inputs, nn::ParamList &params, std::mt19937_64 &rng,
                         int kernel) {
  const int C = channels;
  ConcatParams p;
  p.w_s = params.add_uniform("fsc/s/w", {C, inputs * C, kernel, kernel},
                             inputs * C * kernel * kernel, rng, kReluGain);
  p.b_s = params.add_zeros("fsc/s/b", {C});
  return p;
}

FscOutput fuse(const std::vector<nn::Tensor> &stacks, int t1, int dwi, const FscParams &p) {
  check_stacks(stacks);
  const int n = static_cast<int>(stacks.size());
  if (t1 >= n || dwi >= n)
    throw DimensionError("fsc: modality index out of range");
  if (p.w_a.dim(1) != n * stacks.front().dim(1))
    throw DimensionError("fsc: W_a expects " + std::to_string(p.w_a.dim(1)) +
                         " input channels, got " + std::to_string(n * stacks.front().dim(1)));
  FscOutput out;
  out.f_a = nn::tanh(conv(nn::relu(conv(cat(stacks), p.w_a, p.b_a)), p.w_b, p.b_b));
  out.f_seg = nn::relu(conv(t1 >= 0 ? nn::concat({out.f_a, stacks[t1]}) : out.f_a, p.w_c, p.b_c));
  out.f_dec =
      nn::relu(conv(dwi >= 0 ? nn::concat({out.f_a, stacks[dwi]}) : out.f_a, p.w_d, p.b_d));
  return out;
}

FscOutput fuse(const nn::Tensor &f_t1, const nn::Tensor &f_t2, const nn::Tensor &f_d,
               const FscParams &p) {
  return fuse({f_t1, f_t2, f_d}, 0, 2, p);
}

nn::Tensor fuse_ablated(const std::vector<nn::Tensor> &stacks, const ConcatParams &p) {
  check_stacks(stacks);
  if (p.w_s.dim(1) != static_cast<int>(stacks.size()) * stacks.front().dim(1))
    throw DimensionError("fsc: W_s input channel mismatch");
  return nn::relu(conv(cat(stacks), p.w_s, p.b_s));
}

} // namespace ual::fsc
