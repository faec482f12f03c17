#pragma once

#include <vector>

#include "core/graph.hpp"

namespace fdnet {

struct ConvAttrs {
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
  int dil_h = 1, dil_w = 1;
};

struct ConvTransposeAttrs {
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
  int out_pad_h = 0, out_pad_w = 0;
};

// Elementwise max(0, x); subgradient at exactly 0 is 0.
Value relu(const Value& x);
Value add(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value sum_all(const Value& x);
Value reshape(const Value& x, std::vector<int> shape);

/// Channel concatenation of NCHW tensors sharing N, H, W; backward splits the
/// gradient at the same channel boundaries.
Value concat_channels(const std::vector<Value>& xs);

/// Per-pixel softmax over the channel axis, stabilized by max subtraction.
Value softmax_channels(const Value& x);

/// Cross-correlation with zero padding. Weight shape (out, in, kh, kw); bias
/// may be null.
Value conv2d(const Value& x, const Value& w, const Value& b, const ConvAttrs& attrs);

/// Transposed convolution; weight shape (in, out, kh, kw). Output extent is
/// (H-1)*stride - 2*pad + kh + out_pad.
Value conv_transpose2d(const Value& x, const Value& w, const ConvTransposeAttrs& attrs);

Value max_pool(const Value& x, int kh, int kw, int sh, int sw, int ph = 0, int pw = 0);
Value avg_pool(const Value& x, int kh, int kw, int sh, int sw);

/// Align-corners bilinear interpolation; upsampling only.
Value bilinear_upsample(const Value& x, int out_h, int out_w);

/// Normalization over batch and spatial axes per channel. Training mode uses
/// batch statistics and updates the running buffers in place; inference mode
/// reads the running buffers.
Value batch_norm(const Value& x, const Value& gamma, const Value& beta, Tensor& running_mean,
                 Tensor& running_var, double momentum, double eps, bool training);

// Shape of a conv2d output extent; throws on degenerate (< 1) results.
int conv_out_extent(int in, int k, int stride, int pad, int dil, const char* op);

}  // namespace fdnet
