#pragma once

#include <string>

#include "data/dataset.hpp"
#include "loss/boundary.hpp"
#include "nn/network.hpp"
#include "train/optimizer.hpp"

namespace fdnet::train {

struct TrainResult {
  std::string checkpoint_path;  // final checkpoint
  std::string log_path;         // CSV: iter,lr,loss,eval_miou
  double final_loss = 0.0;
  int64_t clamped_pixels = 0;  // log-clamp events summed over the run
};

/// SGD training loop: sample batch -> crop/flip -> forward (training mode,
/// aux heads per spec) -> boundary-aware deep-supervision loss -> backward ->
/// momentum step under the poly schedule. Deterministic for a fixed config:
/// reruns produce byte-identical checkpoints and logs. Aborts with a
/// diagnostic if the loss leaves the finite range.
TrainResult train_network(nn::Network& net, const data::Dataset& ds, const TrainConfig& tc,
                          const loss::LossConfig& lc, const std::string& out_dir);

}  // namespace fdnet::train
