#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "config/json_util.hpp"
#include "core/raster.hpp"

namespace fdnet::train {

struct MetricsReport {
  double pixel_acc = 0.0;
  double mean_acc = 0.0;
  double miou = 0.0;
  /// Per-class IoU; NaN marks classes absent from both ground truth and
  /// prediction, which are excluded from miou (null in JSON).
  std::vector<double> iou;
  /// Band width -> band-restricted mIoU; nullopt when the band is empty.
  std::vector<std::pair<int, std::optional<double>>> trimap;

  cfg::Json to_json() const;
};

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int class_count);

  /// Accumulates pred/gt pairs, skipping ignore pixels; when roi is given,
  /// only pixels inside it count.
  void add(const Raster& pred, const Raster& gt, int ignore_label, const Mask* roi = nullptr);

  int64_t total() const;
  int class_count() const { return c_; }
  MetricsReport report() const;  // pixel_acc / mean_acc / iou / miou

 private:
  int c_;
  std::vector<int64_t> m_;  // row = ground truth, column = prediction
};

/// mIoU restricted to the dilated ground-truth boundary band; absent (not 0)
/// when gt has no boundary or no valid pixel falls inside the band.
std::optional<double> trimap_miou(const Raster& pred, const Raster& gt, int band_width,
                                  int class_count, int ignore_label);

}  // namespace fdnet::train
