#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/graph.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"

namespace fdnet::nn {

/// Owns every parameter of a network in registration order; the order is the
/// checkpoint layout and must be construction-deterministic.
class ParamRegistry {
 public:
  ParamPtr add(const std::string& id, Tensor init, bool learnable, bool decay);
  const std::vector<ParamPtr>& all() const { return params_; }
  ParamPtr find(const std::string& id) const;
  int64_t count_learnable() const;

 private:
  std::vector<ParamPtr> params_;
};

/// Convolution layer; He-uniform weight init, zero bias. Weight decay applies
/// to the kernel, never the bias.
struct Conv2d {
  ParamPtr w;
  ParamPtr b;  // null when bias-free
  ConvAttrs attrs;

  Conv2d() = default;
  Conv2d(ParamRegistry& reg, const std::string& id, int in_ch, int out_ch, int k, int stride,
         int pad, int dil, bool bias, Rng& rng);
  Value forward(const Value& x) const;
};

struct ConvTranspose2d {
  ParamPtr w;
  ConvTransposeAttrs attrs;

  ConvTranspose2d() = default;
  ConvTranspose2d(ParamRegistry& reg, const std::string& id, int in_ch, int out_ch, int k,
                  int stride, int pad, int out_pad, Rng& rng);
  Value forward(const Value& x) const;
};

struct BatchNorm2d {
  ParamPtr gamma, beta;
  ParamPtr running_mean, running_var;  // non-learnable, checkpointed buffers
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNorm2d() = default;
  BatchNorm2d(ParamRegistry& reg, const std::string& id, int channels);
  Value forward(const Value& x, bool training) const;
};

/// BN -> ReLU -> conv, the pre-activation unit every dense-network piece uses.
struct BnReluConv {
  BatchNorm2d bn;
  Conv2d conv;

  BnReluConv() = default;
  BnReluConv(ParamRegistry& reg, const std::string& id, int in_ch, int out_ch, int k, int stride,
             int pad, int dil, Rng& rng);
  Value forward(const Value& x, bool training) const;
};

/// Dense-layer composite function: BN, ReLU, 1x1 conv to a 4x-growth
/// bottleneck, then BN, ReLU, 3x3 conv to growth channels.
struct CompositeH {
  BnReluConv bottleneck;
  BnReluConv main;

  CompositeH() = default;
  CompositeH(ParamRegistry& reg, const std::string& id, int in_ch, int growth, int dilation,
             Rng& rng);
  Value forward(const Value& x, bool training) const;
};

/// Dense block: layer l consumes the concatenation of the block input and all
/// previous layer outputs; the block output is that full concatenation.
struct DenseBlock {
  std::vector<CompositeH> layers;
  int in_channels = 0, growth = 0;

  DenseBlock() = default;
  DenseBlock(ParamRegistry& reg, const std::string& id, int in_ch, int depth, int growth,
             int dilation, Rng& rng);
  int out_channels() const { return in_channels + static_cast<int>(layers.size()) * growth; }
  Value forward(const Value& x, bool training) const;
};

/// Encoder transition: BN+ReLU+1x1 conv to floor(in * factor) channels, then
/// optional 2x2 average pooling (omitted before block 4 in stride-16 mode).
struct Transition {
  BnReluConv conv;
  bool pool = true;
  int out_ch = 0;

  Transition() = default;
  Transition(ParamRegistry& reg, const std::string& id, int in_ch, double factor, bool pool,
             Rng& rng);
  Value forward(const Value& x, bool training) const;
};

/// Network stem: 7x7 stride-2 conv, BN, ReLU, 3x3 stride-2 max pool -> 1/4.
struct Stem {
  Conv2d conv;
  BatchNorm2d bn;

  Stem() = default;
  Stem(ParamRegistry& reg, const std::string& id, int in_ch, int out_ch, Rng& rng);
  Value forward(const Value& x, bool training) const;
};

/// Scale adapter between feature-map octaves: BN+ReLU followed by one 3x3
/// convolution of stride 2^k (downsampling) or one 4x4 transposed convolution
/// of stride 2^k (upsampling). log2_factor 0 is the identity and owns no
/// parameters.
struct Resize {
  BatchNorm2d bn;
  Conv2d down;
  ConvTranspose2d up;
  int log2_factor = 0;  // positive: downsample, negative: upsample, 0: identity

  Resize() = default;
  Resize(ParamRegistry& reg, const std::string& id, int in_ch, int out_ch, int log2_factor,
         Rng& rng);
  Value forward(const Value& x, bool training) const;
};

/// Per-stage prediction head: 1x1 conv (with bias) to class scores, bilinearly
/// upsampled to the requested output size at forward time.
struct Head {
  Conv2d conv;

  Head() = default;
  Head(ParamRegistry& reg, const std::string& id, int in_ch, int classes, Rng& rng);
  Value forward(const Value& x, int out_h, int out_w) const;
};

}  // namespace fdnet::nn
