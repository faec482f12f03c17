#include "train/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "core/finite_diff.hpp"
#include "core/ops.hpp"
#include "loss/boundary.hpp"
#include "nn/network.hpp"

namespace fdnet::train {
namespace {

using detail::require;

Tensor rand_tensor(const std::vector<int>& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

Raster rand_labels(int h, int w, int classes, Rng& rng) {
  Raster r(h, w);
  for (auto& v : r.v) v = rng.uniform_int(0, classes - 1);
  return r;
}

loss::LossConfig small_loss_cfg(const char* mode, double lambda, int classes) {
  loss::LossConfig c;
  c.alpha = {4.0, 2.0, 1.0};
  c.kernels = {1, 2};
  c.weight_mode = mode;
  c.lambda = lambda;
  c.class_count = classes;
  return c;
}

double check_conv2d(int dilation) {
  Rng rng(501);
  Tensor x = rand_tensor({2, 3, 7, 7}, rng);
  Tensor w = rand_tensor({4, 3, 3, 3}, rng);
  Tensor b = rand_tensor({4}, rng);
  ConvAttrs attrs;
  attrs.stride_h = attrs.stride_w = 2;
  attrs.pad_h = attrs.pad_w = dilation;
  attrs.dil_h = attrs.dil_w = dilation;
  return finite_diff_check(
      [&](const std::vector<Value>& xs) { return conv2d(xs[0], xs[1], xs[2], attrs); },
      {x, w, b}, 1e-5);
}

double check_conv_transpose2d() {
  Rng rng(502);
  Tensor x = rand_tensor({1, 3, 4, 5}, rng);
  Tensor w = rand_tensor({3, 2, 4, 4}, rng);
  ConvTransposeAttrs attrs;
  attrs.stride_h = attrs.stride_w = 2;
  attrs.pad_h = attrs.pad_w = 1;
  return finite_diff_check(
      [&](const std::vector<Value>& xs) { return conv_transpose2d(xs[0], xs[1], attrs); }, {x, w},
      1e-5);
}

double check_batch_norm(bool training) {
  Rng rng(503);
  Tensor x = rand_tensor({2, 3, 4, 4}, rng);
  Tensor gamma = rand_tensor({3}, rng, 0.5, 1.5);
  Tensor beta = rand_tensor({3}, rng);
  Tensor rm = rand_tensor({3}, rng, -0.2, 0.2);
  Tensor rv = rand_tensor({3}, rng, 0.5, 1.5);
  return finite_diff_check(
      [&](const std::vector<Value>& xs) {
        Tensor rm_copy = rm, rv_copy = rv;  // keep the fixture state call-independent
        return batch_norm(xs[0], xs[1], xs[2], rm_copy, rv_copy, 0.1, 1e-5, training);
      },
      {x, gamma, beta}, 1e-5);
}

double check_max_pool() {
  Rng rng(504);
  Tensor x = rand_tensor({2, 3, 6, 6}, rng);
  return finite_diff_check(
      [&](const std::vector<Value>& xs) { return max_pool(xs[0], 3, 3, 2, 2, 1, 1); }, {x}, 1e-5);
}

double check_avg_pool() {
  Rng rng(505);
  Tensor x = rand_tensor({2, 3, 6, 6}, rng);
  return finite_diff_check(
      [&](const std::vector<Value>& xs) { return avg_pool(xs[0], 2, 2, 2, 2); }, {x}, 1e-5);
}

double check_bilinear_upsample() {
  Rng rng(506);
  Tensor x = rand_tensor({1, 3, 5, 7}, rng);
  return finite_diff_check(
      [&](const std::vector<Value>& xs) { return bilinear_upsample(xs[0], 11, 13); }, {x}, 1e-5);
}

// softmax outputs sum to one per pixel, so checking through the plain sum
// reduction would differentiate a constant; weight the outputs first
double check_softmax() {
  Rng rng(507);
  Tensor x = rand_tensor({2, 4, 3, 3}, rng);
  Tensor mask = rand_tensor({2, 4, 3, 3}, rng);
  return finite_diff_check(
      [&](const std::vector<Value>& xs) {
        return mul(softmax_channels(xs[0]), make_leaf(mask));
      },
      {x}, 1e-5);
}

double check_concat() {
  Rng rng(508);
  Tensor a = rand_tensor({1, 2, 4, 4}, rng);
  Tensor b = rand_tensor({1, 3, 4, 4}, rng);
  Tensor mask = rand_tensor({1, 5, 4, 4}, rng);
  return finite_diff_check(
      [&](const std::vector<Value>& xs) {
        return mul(concat_channels({xs[0], xs[1]}), make_leaf(mask));
      },
      {a, b}, 1e-5);
}

// BN -> ReLU -> 1x1 conv (bottleneck) -> BN -> ReLU -> 3x3 conv, the dense
// layer transform, differentiated against the input and all six parameters
double check_composite_h() {
  Rng rng(509);
  int in = 5, bottleneck = 8, growth = 2;
  Tensor x = rand_tensor({2, in, 5, 5}, rng);
  Tensor g1 = rand_tensor({in}, rng, 0.5, 1.5);
  Tensor b1 = rand_tensor({in}, rng);
  Tensor w1 = rand_tensor({bottleneck, in, 1, 1}, rng, -0.5, 0.5);
  Tensor g2 = rand_tensor({bottleneck}, rng, 0.5, 1.5);
  Tensor b2 = rand_tensor({bottleneck}, rng);
  Tensor w2 = rand_tensor({growth, bottleneck, 3, 3}, rng, -0.5, 0.5);
  Rng pick(510);
  return finite_diff_check(
      [&](const std::vector<Value>& xs) {
        Tensor rm1({in}), rv1 = Tensor::full({in}, 1.0);
        Tensor rm2({bottleneck}), rv2 = Tensor::full({bottleneck}, 1.0);
        ConvAttrs one;
        ConvAttrs three;
        three.pad_h = three.pad_w = 1;
        Value h = conv2d(relu(batch_norm(xs[0], xs[1], xs[2], rm1, rv1, 0.1, 1e-5, true)), xs[3],
                         nullptr, one);
        return conv2d(relu(batch_norm(h, xs[4], xs[5], rm2, rv2, 0.1, 1e-5, true)), xs[6], nullptr,
                      three);
      },
      {x, g1, b1, w1, g2, b2, w2}, 1e-5, 60, &pick);
}

double check_boundary_loss() {
  Rng rng(511);
  Tensor logits = rand_tensor({1, 3, 5, 5}, rng, -1.5, 1.5);
  Raster gt = rand_labels(5, 5, 3, rng);
  loss::LossConfig cfg = small_loss_cfg("exp", 0.75, 3);
  loss::BandMap bm = loss::band_partition(gt, cfg, 255);
  return finite_diff_check(
      [&](const std::vector<Value>& xs) {
        return loss::boundary_aware_loss(softmax_channels(xs[0]), {gt}, {bm}, cfg, 255);
      },
      {logits}, 1e-5);
}

nn::NetworkSpec e2e_spec() {
  nn::NetworkSpec spec;
  spec.class_count = 4;
  spec.encoder_depths = {1, 1, 1, 1};
  spec.growth = 4;
  spec.init_channels = 8;
  spec.stride = 16;
  spec.wiring = "dense";
  spec.after_agg_widths = {16, 12};
  spec.after_block_widths = {12, 8};
  spec.reuse_widths = {8, 6, 4};
  spec.decoder_depths = {1, 1};
  spec.deep_supervision = true;
  return spec;
}

// Full-network check: gradients of the deep-supervision loss with respect to
// 50 sampled parameter coordinates, via central differences on the loss.
double check_fdnet_e2e() {
  auto net = nn::Network::build(e2e_spec(), 42);
  Rng rng(512);
  Tensor input = rand_tensor({1, 3, 32, 32}, rng, 0.0, 1.0);
  Raster gt = rand_labels(32, 32, 4, rng);
  loss::LossConfig cfg = small_loss_cfg("exp", 0.75, 4);
  loss::BandMap bm = loss::band_partition(gt, cfg, 255);

  auto loss_value = [&](bool with_grads) {
    nn::ForwardResult fr = net->forward(make_leaf(input), /*training=*/true, /*with_aux=*/true);
    Value l = loss::deep_supervision_loss(fr.logits, {gt}, {bm}, cfg, 255);
    require(l->value.all_finite(), ErrorKind::runtime, "fdnet_e2e: non-finite loss");
    if (with_grads) {
      for (const ParamPtr& p : net->params().all()) p->grad.zero();
      backward(l);
    }
    return l->value[0];
  };
  loss_value(true);  // analytic gradients at the base point

  // collect learnable coordinates, then sample 50 without replacement
  std::vector<std::pair<ParamPtr, int64_t>> coords;
  for (const ParamPtr& p : net->params().all())
    if (p->learnable)
      for (int64_t k = 0; k < p->value.size(); ++k) coords.emplace_back(p, k);
  Rng pick(513);
  int64_t want = std::min<int64_t>(50, static_cast<int64_t>(coords.size()));
  for (int64_t i = 0; i < want; ++i) {
    int64_t j = i + pick.uniform_int(0, static_cast<int>(coords.size() - 1 - i));
    std::swap(coords[static_cast<size_t>(i)], coords[static_cast<size_t>(j)]);
  }

  const double eps = 1e-5;
  double worst = 0.0;
  for (int64_t i = 0; i < want; ++i) {
    auto& [p, k] = coords[static_cast<size_t>(i)];
    double analytic = p->grad[k];
    double saved = p->value[k];
    p->value[k] = saved + eps;
    double up = loss_value(false);
    p->value[k] = saved - eps;
    double down = loss_value(false);
    p->value[k] = saved;
    double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

const std::vector<std::pair<std::string, std::function<double()>>>& registry() {
  static const std::vector<std::pair<std::string, std::function<double()>>> ops = {
      {"conv2d", [] { return check_conv2d(1); }},
      {"conv2d_dilated", [] { return check_conv2d(2); }},
      {"conv_transpose2d", check_conv_transpose2d},
      {"batch_norm_train", [] { return check_batch_norm(true); }},
      {"batch_norm_infer", [] { return check_batch_norm(false); }},
      {"max_pool", check_max_pool},
      {"avg_pool", check_avg_pool},
      {"bilinear_upsample", check_bilinear_upsample},
      {"softmax", check_softmax},
      {"concat", check_concat},
      {"composite_h", check_composite_h},
      {"boundary_loss", check_boundary_loss},
      {"fdnet_e2e", check_fdnet_e2e},
  };
  return ops;
}

}  // namespace

std::vector<std::string> gradcheck_ops() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

GradCheckEntry run_gradcheck_op(const std::string& op) {
  for (const auto& [name, fn] : registry())
    if (name == op) return {name, fn()};
  fail(ErrorKind::invalid_config, cat("unknown gradcheck op '", op, "'"));
}

std::vector<GradCheckEntry> run_gradcheck(const std::string& selector) {
  std::vector<GradCheckEntry> out;
  if (selector == "all") {
    for (const auto& [name, fn] : registry()) out.push_back({name, fn()});
  } else {
    out.push_back(run_gradcheck_op(selector));
  }
  return out;
}

}  // namespace fdnet::train
