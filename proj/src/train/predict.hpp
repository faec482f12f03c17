#pragma once

#include <array>
#include <string>
#include <vector>

#include "data/dataset.hpp"
#include "nn/network.hpp"
#include "train/metrics.hpp"

namespace fdnet::train {

struct Prediction {
  Raster labels;  // per-pixel argmax, ties toward the lowest class index
  Tensor probs;   // CxHxW averaged probabilities at native resolution
};

/// Multi-scale, optionally flip-averaged inference. Per scale the image is
/// bilinearly resized, mean-padded up to the network granularity, forwarded
/// in inference mode, unpadded, and the class probabilities are resized back
/// to the native extent; the final map is the arithmetic mean over all
/// passes. Scales whose resized extent collapses below 2 pixels are skipped
/// with a warning.
Prediction predict_multiscale(const nn::Network& net, const Tensor& image,
                              const std::vector<double>& scales, bool flip,
                              const std::array<double, 3>& channel_means,
                              std::vector<std::string>* warnings = nullptr);

struct EvalOptions {
  std::vector<double> scales = {1.0};
  bool flip = false;
  std::vector<int> trimap_widths;  // empty = no trimap curve
};

/// Whole-dataset metrics; the trimap curve aggregates one confusion matrix
/// per width across samples (bands are per-sample ground-truth geometry).
MetricsReport evaluate(const nn::Network& net, const data::Dataset& ds, const EvalOptions& opt);

}  // namespace fdnet::train
