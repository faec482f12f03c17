#include "nn/layers.hpp"

#include <cmath>

namespace fdnet::nn {

ParamPtr ParamRegistry::add(const std::string& id, Tensor init, bool learnable, bool decay) {
  for (const auto& p : params_)
    if (p->id == id) fail(ErrorKind::runtime, cat("duplicate parameter id '", id, "'"));
  params_.push_back(std::make_shared<Parameter>(id, std::move(init), learnable, decay));
  return params_.back();
}

ParamPtr ParamRegistry::find(const std::string& id) const {
  for (const auto& p : params_)
    if (p->id == id) return p;
  return nullptr;
}

int64_t ParamRegistry::count_learnable() const {
  int64_t n = 0;
  for (const auto& p : params_)
    if (p->learnable) n += p->value.size();
  return n;
}

namespace {

/// He-uniform: U(-b, b) with b = sqrt(6 / fan_in), fan_in read off the kernel
/// as dim(1) * kh * kw for both conv and transposed-conv layouts.
Tensor he_uniform(const std::vector<int>& shape, Rng& rng) {
  double fan_in = static_cast<double>(shape[1]) * shape[2] * shape[3];
  double bound = std::sqrt(6.0 / fan_in);
  Tensor t(shape);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

Conv2d::Conv2d(ParamRegistry& reg, const std::string& id, int in_ch, int out_ch, int k, int stride,
               int pad, int dil, bool bias, Rng& rng) {
  w = reg.add(id + ".w", he_uniform({out_ch, in_ch, k, k}, rng), true, true);
  if (bias) b = reg.add(id + ".b", Tensor({out_ch}), true, false);
  attrs.stride_h = attrs.stride_w = stride;
  attrs.pad_h = attrs.pad_w = pad;
  attrs.dil_h = attrs.dil_w = dil;
}

Value Conv2d::forward(const Value& x) const {
  return conv2d(x, make_param_leaf(w), b ? make_param_leaf(b) : Value(), attrs);
}

ConvTranspose2d::ConvTranspose2d(ParamRegistry& reg, const std::string& id, int in_ch, int out_ch,
                                 int k, int stride, int pad, int out_pad, Rng& rng) {
  w = reg.add(id + ".w", he_uniform({in_ch, out_ch, k, k}, rng), true, true);
  attrs.stride_h = attrs.stride_w = stride;
  attrs.pad_h = attrs.pad_w = pad;
  attrs.out_pad_h = attrs.out_pad_w = out_pad;
}

Value ConvTranspose2d::forward(const Value& x) const {
  return conv_transpose2d(x, make_param_leaf(w), attrs);
}

BatchNorm2d::BatchNorm2d(ParamRegistry& reg, const std::string& id, int channels) {
  gamma = reg.add(id + ".gamma", Tensor::full({channels}, 1.0), true, false);
  beta = reg.add(id + ".beta", Tensor({channels}), true, false);
  running_mean = reg.add(id + ".running_mean", Tensor({channels}), false, false);
  running_var = reg.add(id + ".running_var", Tensor::full({channels}, 1.0), false, false);
}

Value BatchNorm2d::forward(const Value& x, bool training) const {
  return batch_norm(x, make_param_leaf(gamma), make_param_leaf(beta), running_mean->value,
                    running_var->value, momentum, eps, training);
}

BnReluConv::BnReluConv(ParamRegistry& reg, const std::string& id, int in_ch, int out_ch, int k,
                       int stride, int pad, int dil, Rng& rng)
    : bn(reg, id + ".bn", in_ch),
      conv(reg, id + ".conv", in_ch, out_ch, k, stride, pad, dil, /*bias=*/false, rng) {}

Value BnReluConv::forward(const Value& x, bool training) const {
  return conv.forward(relu(bn.forward(x, training)));
}

CompositeH::CompositeH(ParamRegistry& reg, const std::string& id, int in_ch, int growth,
                       int dilation, Rng& rng)
    : bottleneck(reg, id + ".bottleneck", in_ch, 4 * growth, 1, 1, 0, 1, rng),
      main(reg, id + ".main", 4 * growth, growth, 3, 1, dilation, dilation, rng) {}

Value CompositeH::forward(const Value& x, bool training) const {
  return main.forward(bottleneck.forward(x, training), training);
}

DenseBlock::DenseBlock(ParamRegistry& reg, const std::string& id, int in_ch, int depth, int growth_,
                       int dilation, Rng& rng)
    : in_channels(in_ch), growth(growth_) {
  detail::require(depth >= 1, ErrorKind::invalid_config, cat(id, ": depth must be >= 1"));
  layers.reserve(static_cast<size_t>(depth));
  for (int l = 0; l < depth; ++l)
    layers.emplace_back(reg, cat(id, ".layer", l), in_ch + l * growth_, growth_, dilation, rng);
}

Value DenseBlock::forward(const Value& x, bool training) const {
  std::vector<Value> features = {x};
  for (const auto& layer : layers) {
    Value input = features.size() == 1 ? features[0] : concat_channels(features);
    features.push_back(layer.forward(input, training));
  }
  return concat_channels(features);
}

Transition::Transition(ParamRegistry& reg, const std::string& id, int in_ch, double factor,
                       bool pool_, Rng& rng)
    : pool(pool_) {
  detail::require(factor > 0.0 && factor <= 1.0, ErrorKind::invalid_config,
                  cat(id, ": compression factor must lie in (0, 1]"));
  out_ch = static_cast<int>(std::floor(in_ch * factor));
  detail::require(out_ch >= 1, ErrorKind::invalid_config, cat(id, ": compressed width is zero"));
  conv = BnReluConv(reg, id, in_ch, out_ch, 1, 1, 0, 1, rng);
}

Value Transition::forward(const Value& x, bool training) const {
  Value y = conv.forward(x, training);
  return pool ? avg_pool(y, 2, 2, 2, 2) : y;
}

Stem::Stem(ParamRegistry& reg, const std::string& id, int in_ch, int out_ch, Rng& rng)
    : conv(reg, id + ".conv", in_ch, out_ch, 7, 2, 3, 1, /*bias=*/false, rng),
      bn(reg, id + ".bn", out_ch) {}

Value Stem::forward(const Value& x, bool training) const {
  return max_pool(relu(bn.forward(conv.forward(x), training)), 3, 3, 2, 2, 1, 1);
}

Resize::Resize(ParamRegistry& reg, const std::string& id, int in_ch, int out_ch, int log2_factor_,
               Rng& rng)
    : log2_factor(log2_factor_) {
  if (log2_factor == 0) {
    detail::require(in_ch == out_ch, ErrorKind::invalid_config,
                    cat(id, ": identity resize cannot change channel count"));
    return;
  }
  bn = BatchNorm2d(reg, id + ".bn", in_ch);
  int stride = 1 << std::abs(log2_factor);
  if (log2_factor > 0) {
    down = Conv2d(reg, id + ".conv", in_ch, out_ch, 3, stride, 1, 1, /*bias=*/false, rng);
  } else {
    // 4x4 kernel; padding/output-padding chosen so the extent is exactly
    // stride * H for every stride: (H-1)*s - 2p + 4 + op == s*H.
    int pad = stride == 2 ? 1 : 0;
    int out_pad = stride == 2 ? 0 : (stride == 4 ? 0 : stride - 4);
    up = ConvTranspose2d(reg, id + ".deconv", in_ch, out_ch, 4, stride, pad, out_pad, rng);
  }
}

Value Resize::forward(const Value& x, bool training) const {
  if (log2_factor == 0) return x;
  Value y = relu(bn.forward(x, training));
  return log2_factor > 0 ? down.forward(y) : up.forward(y);
}

Head::Head(ParamRegistry& reg, const std::string& id, int in_ch, int classes, Rng& rng)
    : conv(reg, id + ".conv", in_ch, classes, 1, 1, 0, 1, /*bias=*/true, rng) {}

Value Head::forward(const Value& x, int out_h, int out_w) const {
  Value logits = conv.forward(x);
  if (logits->value.h() == out_h && logits->value.w() == out_w) return logits;
  return bilinear_upsample(logits, out_h, out_w);
}

}  // namespace fdnet::nn
