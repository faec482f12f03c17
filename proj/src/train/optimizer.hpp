#pragma once

#include <cstdint>
#include <vector>

#include "config/json_util.hpp"
#include "nn/layers.hpp"

namespace fdnet::train {

struct TrainConfig {
  double base_lr = 0.00025;
  double power = 0.9;
  int max_iter = 300;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int batch_size = 4;
  int crop = 64;
  uint64_t seed = 1;
  int checkpoint_interval = 100;  // 0 = final checkpoint only
  int eval_interval = 0;          // 0 = no during-training evaluation

  void validate() const;
  cfg::Json to_json() const;
  static TrainConfig from_json(const cfg::Json& j, const std::string& path);
};

/// base_lr * (1 - iter/max_iter)^power
double poly_lr(int64_t iter, const TrainConfig& cfg);

/// Classical-momentum SGD with weight decay folded into the gradient. Decay
/// touches only parameters flagged for it (conv kernels, not BN or biases).
class SgdOptimizer {
 public:
  explicit SgdOptimizer(const nn::ParamRegistry& reg);

  void step(nn::ParamRegistry& reg, double lr, double momentum, double weight_decay);
  int64_t iterations() const { return iter_; }
  const Tensor& velocity(size_t param_index) const { return velocity_[param_index]; }

 private:
  std::vector<Tensor> velocity_;  // aligned with registry order; empty for frozen params
  int64_t iter_ = 0;
};

void zero_grads(nn::ParamRegistry& reg);

}  // namespace fdnet::train
