#pragma once

#include <string>

#include "config/json_util.hpp"
#include "loss/boundary.hpp"
#include "nn/network.hpp"
#include "train/optimizer.hpp"

namespace fdnet {

/// Top-level run configuration: sections `network`, `train`, `loss`, `data`.
/// Every section falls back to its defaults when absent; unknown keys are
/// rejected with their full path. loss.class_count inherits
/// network.class_count unless set explicitly.
struct RunConfig {
  nn::NetworkSpec network;
  train::TrainConfig train;
  loss::LossConfig loss;
  std::string data_dir;  // data.dir: training dataset directory
  std::string eval_dir;  // data.eval_dir: optional held-out dataset

  static RunConfig from_json(const cfg::Json& j);
  static RunConfig from_text(const std::string& text, const std::string& what);
  static RunConfig from_file(const std::string& path);
  cfg::Json to_json() const;
};

}  // namespace fdnet
