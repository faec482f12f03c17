#include "train/optimizer.hpp"

#include <cmath>

namespace fdnet::train {

using detail::require;

void TrainConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    require(ok, ErrorKind::invalid_config, "train." + msg);
  };
  check(base_lr > 0.0, "base_lr: must be positive");
  check(power > 0.0, "power: must be positive");
  check(max_iter >= 1, "max_iter: must be >= 1");
  check(momentum >= 0.0 && momentum < 1.0, "momentum: must be in [0,1)");
  check(weight_decay >= 0.0, "weight_decay: must be >= 0");
  check(batch_size >= 1, "batch_size: must be >= 1");
  check(crop >= 1, "crop: must be >= 1");
  check(checkpoint_interval >= 0, "checkpoint_interval: must be >= 0");
  check(eval_interval >= 0, "eval_interval: must be >= 0");
}

cfg::Json TrainConfig::to_json() const {
  return cfg::Json{{"base_lr", base_lr},
                   {"power", power},
                   {"max_iter", max_iter},
                   {"momentum", momentum},
                   {"weight_decay", weight_decay},
                   {"batch_size", batch_size},
                   {"crop", crop},
                   {"seed", seed},
                   {"checkpoint_interval", checkpoint_interval},
                   {"eval_interval", eval_interval}};
}

TrainConfig TrainConfig::from_json(const cfg::Json& j, const std::string& path) {
  cfg::require_object(j, path);
  cfg::reject_unknown(j,
                      {"base_lr", "power", "max_iter", "momentum", "weight_decay", "batch_size",
                       "crop", "seed", "checkpoint_interval", "eval_interval"},
                      path);
  TrainConfig c;
  c.base_lr = cfg::get_double_or(j, "base_lr", path, c.base_lr);
  c.power = cfg::get_double_or(j, "power", path, c.power);
  c.max_iter = cfg::get_int_or(j, "max_iter", path, c.max_iter);
  c.momentum = cfg::get_double_or(j, "momentum", path, c.momentum);
  c.weight_decay = cfg::get_double_or(j, "weight_decay", path, c.weight_decay);
  c.batch_size = cfg::get_int_or(j, "batch_size", path, c.batch_size);
  c.crop = cfg::get_int_or(j, "crop", path, c.crop);
  c.seed = cfg::get_u64_or(j, "seed", path, c.seed);
  c.checkpoint_interval = cfg::get_int_or(j, "checkpoint_interval", path, c.checkpoint_interval);
  c.eval_interval = cfg::get_int_or(j, "eval_interval", path, c.eval_interval);
  c.validate();
  return c;
}

double poly_lr(int64_t iter, const TrainConfig& cfg) {
  require(iter >= 0 && iter <= cfg.max_iter, ErrorKind::runtime,
          cat("poly_lr: iteration ", iter, " outside [0,", cfg.max_iter, "]"));
  double frac = 1.0 - static_cast<double>(iter) / static_cast<double>(cfg.max_iter);
  return cfg.base_lr * std::pow(frac, cfg.power);
}

SgdOptimizer::SgdOptimizer(const nn::ParamRegistry& reg) {
  for (const ParamPtr& p : reg.all()) {
    velocity_.emplace_back();
    if (p->learnable) velocity_.back() = Tensor(p->value.shape());
  }
}

void SgdOptimizer::step(nn::ParamRegistry& reg, double lr, double momentum, double weight_decay) {
  const auto& params = reg.all();
  require(params.size() == velocity_.size(), ErrorKind::runtime,
          "optimizer state does not match the parameter registry");
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.learnable) continue;
    Tensor& v = velocity_[i];
    require(p.grad.same_shape(p.value) && v.same_shape(p.value), ErrorKind::shape_mismatch,
            cat(p.id, ": gradient/velocity shape mismatch"));
    double wd = p.decay ? weight_decay : 0.0;
    for (int64_t k = 0; k < v.size(); ++k) {
      double g = p.grad[k] + wd * p.value[k];
      v[k] = momentum * v[k] + g;
      p.value[k] -= lr * v[k];
    }
  }
  ++iter_;
}

void zero_grads(nn::ParamRegistry& reg) {
  for (const ParamPtr& p : reg.all()) p->grad.zero();
}

}  // namespace fdnet::train
