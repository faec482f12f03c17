#include "train/metrics.hpp"

#include <cmath>
#include <limits>

#include "loss/boundary.hpp"

namespace fdnet::train {

using detail::require;

cfg::Json MetricsReport::to_json() const {
  cfg::Json j{{"pixel_acc", pixel_acc}, {"mean_acc", mean_acc}, {"miou", miou}};
  cfg::Json ious = cfg::Json::array();
  for (double v : iou) {
    if (std::isnan(v))
      ious.push_back(nullptr);
    else
      ious.push_back(v);
  }
  j["iou"] = ious;
  if (!trimap.empty()) {
    cfg::Json curve = cfg::Json::array();
    for (const auto& [width, value] : trimap) {
      cfg::Json entry{{"width", width}};
      if (value)
        entry["miou"] = *value;
      else
        entry["miou"] = nullptr;
      curve.push_back(entry);
    }
    j["trimap"] = curve;
  }
  return j;
}

ConfusionMatrix::ConfusionMatrix(int class_count) : c_(class_count) {
  require(class_count >= 2, ErrorKind::invalid_config,
          cat("confusion matrix needs >= 2 classes, got ", class_count));
  m_.assign(static_cast<size_t>(c_) * static_cast<size_t>(c_), 0);
}

void ConfusionMatrix::add(const Raster& pred, const Raster& gt, int ignore_label,
                          const Mask* roi) {
  require(pred.same_shape(gt), ErrorKind::shape_mismatch,
          cat("confusion: pred ", pred.h, "x", pred.w, " vs gt ", gt.h, "x", gt.w));
  if (roi)
    require(roi->h == gt.h && roi->w == gt.w, ErrorKind::shape_mismatch,
            "confusion: roi extents differ from rasters");
  for (int y = 0; y < gt.h; ++y)
    for (int x = 0; x < gt.w; ++x) {
      int32_t t = gt.at(y, x);
      if (t == ignore_label) continue;
      if (roi && !roi->at(y, x)) continue;
      int32_t p = pred.at(y, x);
      require(t >= 0 && t < c_, ErrorKind::runtime, cat("confusion: gt class ", t, " out of range"));
      require(p >= 0 && p < c_, ErrorKind::runtime,
              cat("confusion: predicted class ", p, " out of range"));
      ++m_[static_cast<size_t>(t) * static_cast<size_t>(c_) + static_cast<size_t>(p)];
    }
}

int64_t ConfusionMatrix::total() const {
  int64_t n = 0;
  for (int64_t v : m_) n += v;
  return n;
}

MetricsReport ConfusionMatrix::report() const {
  int64_t n = total();
  require(n > 0, ErrorKind::runtime, "metrics requested on an empty confusion matrix");
  MetricsReport r;
  double nan = std::numeric_limits<double>::quiet_NaN();

  int64_t trace = 0;
  double recall_sum = 0.0;
  int gt_classes = 0;
  double iou_sum = 0.0;
  int iou_classes = 0;
  for (int c = 0; c < c_; ++c) {
    int64_t tp = m_[static_cast<size_t>(c) * c_ + static_cast<size_t>(c)];
    int64_t row = 0, col = 0;
    for (int k = 0; k < c_; ++k) {
      row += m_[static_cast<size_t>(c) * c_ + static_cast<size_t>(k)];
      col += m_[static_cast<size_t>(k) * c_ + static_cast<size_t>(c)];
    }
    trace += tp;
    if (row > 0) {
      recall_sum += static_cast<double>(tp) / static_cast<double>(row);
      ++gt_classes;
    }
    int64_t uni = row + col - tp;
    if (uni > 0) {
      double iou = static_cast<double>(tp) / static_cast<double>(uni);
      r.iou.push_back(iou);
      iou_sum += iou;
      ++iou_classes;
    } else {
      r.iou.push_back(nan);  // absent from gt and pred: excluded
    }
  }
  r.pixel_acc = static_cast<double>(trace) / static_cast<double>(n);
  r.mean_acc = gt_classes > 0 ? recall_sum / gt_classes : 0.0;
  r.miou = iou_classes > 0 ? iou_sum / iou_classes : 0.0;
  return r;
}

std::optional<double> trimap_miou(const Raster& pred, const Raster& gt, int band_width,
                                  int class_count, int ignore_label) {
  require(band_width >= 1, ErrorKind::invalid_config,
          cat("trimap band width must be >= 1, got ", band_width));
  Mask boundary = loss::extract_boundary(gt, ignore_label);
  if (boundary.count() == 0) return std::nullopt;
  Mask band = loss::dilate(boundary, band_width);
  ConfusionMatrix cm(class_count);
  cm.add(pred, gt, ignore_label, &band);
  if (cm.total() == 0) return std::nullopt;
  return cm.report().miou;
}

}  // namespace fdnet::train
