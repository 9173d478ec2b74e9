#pragma once

#include <array>
#include <random>
#include <vector>

#include "ual/grid.hpp"
#include "ual/nn/params.hpp"

namespace ual::heads {

struct SegPrediction {
  Grid probs; // per-pixel tumour probability
};

struct DetPrediction {
  std::array<double, 3> class_probs{}; // no tumour, hemangioma, HCC
  BoxTuple box;
  [[nodiscard]] int cls() const;
};

struct SegDecoder {
  std::vector<nn::Tensor> up_w, up_b; // four 3x3 stride-2 transposed convs
  nn::Tensor out_w, out_b;            // 1x1 conv to one channel
};

struct DetHead {
  nn::Tensor fc1_w, fc1_b, fc2_w, fc2_b;
};

inline constexpr int kBoxOutputs = 4; // cx, cy, w, h before the square rule

/// Decoder widths 8b, 4b, 2b, b for base width b ("dec/up<k>/{w,b}", "dec/out/{w,b}").
SegDecoder make_decoder(int base, nn::ParamList &params, std::mt19937_64 &rng);
/// GAP -> FC(8b -> 4b) -> ReLU -> FC(4b -> 3 + 4) ("det/fc{1,2}/{w,b}").
DetHead make_det_head(int base, nn::ParamList &params, std::mt19937_64 &rng);

/// [N,8b,H/16,W/16] -> logits [N,1,H,W].
nn::Tensor decode_seg_logits(const nn::Tensor &f_seg, const SegDecoder &p);

struct DetOutput {
  nn::Tensor class_logits; // [N,3]
  nn::Tensor box;          // [N,3] (cx, cy, side) in pixels
};

/// Box outputs: logistic * extent (width for cx and w, height for cy and h),
/// then side = max(w, h). Throws NumericError for non-finite logits.
DetOutput detect_raw(const nn::Tensor &f_dec, const DetHead &p, int height, int width);

/// [N,4] (cx, cy, w, h) -> [N,3] (cx, cy, max(w, h)). Ties send the gradient to w.
nn::Tensor square_box(const nn::Tensor &cxcywh);

/// Sample n of decoder logits as probabilities.
SegPrediction seg_prediction(const nn::Tensor &logits, int n);
/// Softmax class probabilities and the box clamped inside the image.
DetPrediction det_prediction(const DetOutput &out, int n, int height, int width);

/// Side clamped to [1, min(H, W)], centre shifted so the square lies inside.
BoxTuple clamp_box(const BoxTuple &box, int height, int width);

// Single-sample conveniences over the batched forms.
SegPrediction decode_seg(const nn::Tensor &f_seg, const SegDecoder &p);
DetPrediction detect(const nn::Tensor &f_dec, const DetHead &p, int height, int width);

} // namespace ual::heads
