#include "ual/mprgd.hpp"

#include <cmath>

#include "ual/cswp.hpp"
#include "ual/errors.hpp"
#include "ual/nn/ops.hpp"

namespace ual::mprgd {

namespace {

const double kReluGain = std::sqrt(6.0);

void check_finite(const nn::Tensor &t, const char *where) {
  for (nn::Real v : t.values())
    if (!std::isfinite(v))
      throw NumericError(std::string("discriminator ") + where + ": non-finite activation");
}

} // namespace

int conv_feature_width(int base) {
  const int side = cswp::kCanvasSize / 8;
  return 4 * base * side * side;
}

Discriminator make_discriminator(int base, int mpr_length, nn::ParamList &params,
                                 std::mt19937_64 &rng) {
  Discriminator d;
  d.mpr_length = mpr_length;
  int cin = 1;
  for (int k = 0; k < 3; ++k) {
    const int cout = base << k;
    const std::string name = "dis/conv" + std::to_string(k + 1);
    d.conv_w.push_back(params.add_uniform(name + "/w", {cout, cin, 3, 3}, cin * 9, rng, kReluGain));
    d.conv_b.push_back(params.add_zeros(name + "/b", {cout}));
    cin = cout;
  }
  const int in1 = conv_feature_width(base) + mpr_length;
  d.fc1_w = params.add_uniform("dis/fc1/w", {4 * base, in1}, in1, rng, kReluGain);
  d.fc1_b = params.add_zeros("dis/fc1/b", {4 * base});
  d.fc2_w = params.add_uniform("dis/fc2/w", {1, 4 * base}, 4 * base, rng);
  d.fc2_b = params.add_zeros("dis/fc2/b", {1});
  return d;
}

nn::Tensor discriminate_logits(const nn::Tensor &canvas, const nn::Tensor &mpr,
                               const Discriminator &d) {
  if (canvas.rank() != 4 || canvas.dim(1) != 1 || canvas.dim(2) != cswp::kCanvasSize ||
      canvas.dim(3) != cswp::kCanvasSize)
    throw DimensionError("discriminate: expected [N,1,64,64] canvas, got " +
                         nn::shape_str(canvas.shape()));
  const int N = canvas.dim(0);
  nn::Tensor x = canvas;
  for (std::size_t k = 0; k < d.conv_w.size(); ++k)
    x = nn::max_pool2(nn::relu(nn::conv2d(x, d.conv_w[k], d.conv_b[k], 1)));
  check_finite(x, "conv stack");
  x = nn::reshape(x, {N, static_cast<int>(x.size()) / N});
  if (d.mpr_length > 0) {
    if (!mpr.defined() || mpr.rank() != 2 || mpr.dim(0) != N || mpr.dim(1) != d.mpr_length)
      throw DimensionError("discriminate: expected radiomics [" + std::to_string(N) + "," +
                           std::to_string(d.mpr_length) + "]");
    x = nn::concat({x, mpr});
  } else if (mpr.defined() && mpr.size() > 0) {
    throw DimensionError("discriminate: radiomics given to a discriminator without MPR input");
  }
  x = nn::relu(nn::linear(x, d.fc1_w, d.fc1_b));
  x = nn::linear(x, d.fc2_w, d.fc2_b);
  check_finite(x, "output");
  return x;
}

double discriminate(const Grid &canvas, const std::optional<std::vector<double>> &mpr,
                    const Discriminator &d) {
  for (float v : canvas.values)
    if (!(v >= 0.0F && v <= 2.0F))
      throw DomainError("discriminate: canvas value " + std::to_string(v) +
                        " outside [0,2]");
  nn::NoGradGuard guard;
  auto c = nn::Tensor::from({1, 1, canvas.height, canvas.width},
                            {canvas.values.begin(), canvas.values.end()});
  nn::Tensor m;
  if (mpr) {
    if (static_cast<int>(mpr->size()) != d.mpr_length)
      throw DimensionError("discriminate: radiomics length " + std::to_string(mpr->size()) +
                           ", expected " + std::to_string(d.mpr_length));
    m = nn::Tensor::from({1, d.mpr_length}, {mpr->begin(), mpr->end()});
  } else if (d.mpr_length > 0) {
    throw DimensionError("discriminate: radiomics vector required");
  }
  const double z = discriminate_logits(c, m, d).item();
  return 1.0 / (1.0 + std::exp(-z));
}

} // namespace ual::mprgd
