#pragma once

#include <vector>

#include "ual/nn/tensor.hpp"

namespace ual::nn {

// Elementwise (equal shapes).
Tensor add(const Tensor &a, const Tensor &b);
Tensor sub(const Tensor &a, const Tensor &b);
Tensor mul(const Tensor &a, const Tensor &b);
Tensor scale(const Tensor &a, Real s);

Tensor relu(const Tensor &x);
Tensor tanh(const Tensor &x);
Tensor sigmoid(const Tensor &x);

Tensor sum(const Tensor &x);
Tensor mean(const Tensor &x);

/// x [N,Ci,H,W], w [Co,Ci,k,k], optional bias [Co]; stride 1.
Tensor conv2d(const Tensor &x, const Tensor &w, const Tensor &bias, int pad);

/// x [N,Ci,H,W], w [Ci,Co,k,k], optional bias [Co]. Output size
/// (H-1)*stride - 2*pad + k + output_pad.
Tensor conv_transpose2d(const Tensor &x, const Tensor &w, const Tensor &bias, int stride,
                        int pad, int output_pad);

/// 2x2 max-pool, stride 2. H and W must be even.
Tensor max_pool2(const Tensor &x);

/// [N,C,H,W] -> [N,C]
Tensor global_avg_pool(const Tensor &x);

/// x [N,F], w [O,F], optional bias [O] -> [N,O]
Tensor linear(const Tensor &x, const Tensor &w, const Tensor &bias);

/// Same data, new shape.
Tensor reshape(const Tensor &x, Shape shape);

/// Concatenate along axis 1 (channels for 4-D, features for 2-D).
Tensor concat(const std::vector<Tensor> &parts);

/// Columns [begin, end) along axis 1.
Tensor slice(const Tensor &x, int begin, int end);

/// Bilinear resize of [N,C,H,W] with half-pixel centres (align-corners false).
Tensor resize_bilinear(const Tensor &x, int out_h, int out_w);

} // namespace ual::nn
