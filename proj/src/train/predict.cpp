#include "train/predict.hpp"

#include <cmath>

#include "core/ops.hpp"
#include "data/augment.hpp"
#include "loss/boundary.hpp"

namespace fdnet::train {
namespace {

using detail::require;

int ceil_multiple(int v, int g) { return (v + g - 1) / g * g; }

// One inference pass: mean-pad to the network granularity, forward, softmax,
// crop the padding back off. Input and output are CxHxW.
Tensor forward_probs(const nn::Network& net, const Tensor& image,
                     const std::array<double, 3>& means) {
  int h = image.dim(1), w = image.dim(2);
  int g = net.granularity();
  Tensor padded = data::pad_to_mean(image, ceil_multiple(h, g), ceil_multiple(w, g), means);
  int ph = padded.dim(1), pw = padded.dim(2);
  Tensor batched({1, 3, ph, pw},
                 std::vector<double>(padded.data(), padded.data() + padded.size()));
  nn::ForwardResult fr = net.forward(make_leaf(batched), /*training=*/false, /*with_aux=*/false);
  Value probs = softmax_channels(fr.logits.back());
  int ch = probs->value.dim(1);
  Tensor out({ch, h, w});
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[(static_cast<int64_t>(c) * h + y) * w + x] = probs->value.at(0, c, y, x);
  return out;
}

}  // namespace

Prediction predict_multiscale(const nn::Network& net, const Tensor& image,
                              const std::vector<double>& scales, bool flip,
                              const std::array<double, 3>& channel_means,
                              std::vector<std::string>* warnings) {
  require(image.rank() == 3 && image.dim(0) == 3, ErrorKind::shape_mismatch,
          cat("predict: expected 3xHxW image, got ", image.shape_str()));
  require(!scales.empty(), ErrorKind::invalid_config, "predict: scales must be non-empty");
  int h = image.dim(1), w = image.dim(2);
  int classes = net.spec().class_count;

  Tensor sum({classes, h, w});
  int passes = 0;
  for (double s : scales) {
    require(s > 0.0, ErrorKind::invalid_config, cat("predict: scale ", s, " must be positive"));
    int sh = static_cast<int>(std::lround(h * s));
    int sw = static_cast<int>(std::lround(w * s));
    if (sh < 2 || sw < 2) {
      if (warnings)
        warnings->push_back(cat("scale ", s, " skipped: resized extent ", sh, "x", sw,
                                " is below the network minimum"));
      continue;
    }
    Tensor resized = data::resize_bilinear_image(image, sh, sw);
    sum.add_(data::resize_bilinear_image(forward_probs(net, resized, channel_means), h, w));
    ++passes;
    if (flip) {
      Tensor mirrored = forward_probs(net, data::flip_horizontal(resized), channel_means);
      sum.add_(data::resize_bilinear_image(data::flip_horizontal(mirrored), h, w));
      ++passes;
    }
  }
  require(passes > 0, ErrorKind::runtime, "predict: every scale was skipped");

  Prediction out;
  out.probs = std::move(sum);
  out.probs.scale_(1.0 / static_cast<double>(passes));
  out.labels = Raster(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int best = 0;
      double best_p = out.probs[(0 * static_cast<int64_t>(h) + y) * w + x];
      for (int c = 1; c < classes; ++c) {
        double p = out.probs[(static_cast<int64_t>(c) * h + y) * w + x];
        if (p > best_p) {  // strict: ties resolve to the lowest class index
          best_p = p;
          best = c;
        }
      }
      out.labels.at(y, x) = best;
    }
  return out;
}

MetricsReport evaluate(const nn::Network& net, const data::Dataset& ds, const EvalOptions& opt) {
  require(ds.size() > 0, ErrorKind::runtime, "evaluate: dataset is empty");
  require(net.spec().class_count == ds.meta().class_count, ErrorKind::invalid_config,
          cat("evaluate: network has ", net.spec().class_count, " classes, dataset has ",
              ds.meta().class_count));
  int classes = ds.meta().class_count;
  int ignore = ds.meta().ignore_value;

  ConfusionMatrix cm(classes);
  std::vector<ConfusionMatrix> band_cms;
  for (int width : opt.trimap_widths) {
    require(width >= 1, ErrorKind::invalid_config,
            cat("evaluate: trimap width must be >= 1, got ", width));
    band_cms.emplace_back(classes);
  }

  for (int i = 0; i < ds.size(); ++i) {
    data::Sample sample = ds.load(i);
    Prediction pred =
        predict_multiscale(net, sample.image, opt.scales, opt.flip, ds.meta().channel_means);
    cm.add(pred.labels, sample.labels, ignore);
    if (!opt.trimap_widths.empty()) {
      Mask boundary = loss::extract_boundary(sample.labels, ignore);
      if (boundary.count() == 0) continue;
      for (size_t k = 0; k < opt.trimap_widths.size(); ++k) {
        Mask band = loss::dilate(boundary, opt.trimap_widths[k]);
        band_cms[k].add(pred.labels, sample.labels, ignore, &band);
      }
    }
  }

  MetricsReport report = cm.report();
  for (size_t k = 0; k < opt.trimap_widths.size(); ++k) {
    std::optional<double> v;
    if (band_cms[k].total() > 0) v = band_cms[k].report().miou;
    report.trimap.emplace_back(opt.trimap_widths[k], v);
  }
  return report;
}

}  // namespace fdnet::train
