#include "data/augment.hpp"

#include <cmath>

namespace fdnet::data {
namespace {

using detail::require;

void require_chw(const Tensor& t, const char* who) {
  require(t.rank() == 3, ErrorKind::shape_mismatch,
          cat(who, ": expected CxHxW tensor, got ", t.shape_str()));
}

}  // namespace

Tensor pad_to_mean(const Tensor& image, int target_h, int target_w,
                   const std::array<double, 3>& channel_means) {
  require_chw(image, "pad_to_mean");
  int ch = image.dim(0), h = image.dim(1), w = image.dim(2);
  require(ch == 3, ErrorKind::shape_mismatch, cat("pad_to_mean: expected 3 channels, got ", ch));
  require(target_h >= h && target_w >= w, ErrorKind::shape_mismatch,
          cat("pad_to_mean: cannot shrink ", h, "x", w, " to ", target_h, "x", target_w));
  if (target_h == h && target_w == w) return image;
  Tensor out({ch, target_h, target_w});
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < target_h; ++y)
      for (int x = 0; x < target_w; ++x)
        out[(static_cast<int64_t>(c) * target_h + y) * target_w + x] =
            (y < h && x < w) ? image[(static_cast<int64_t>(c) * h + y) * w + x]
                             : channel_means[static_cast<size_t>(c)];
  return out;
}

Raster pad_labels(const Raster& labels, int target_h, int target_w, int ignore_value) {
  require(target_h >= labels.h && target_w >= labels.w, ErrorKind::shape_mismatch,
          cat("pad_labels: cannot shrink ", labels.h, "x", labels.w, " to ", target_h, "x",
              target_w));
  if (target_h == labels.h && target_w == labels.w) return labels;
  Raster out(target_h, target_w, ignore_value);
  for (int y = 0; y < labels.h; ++y)
    for (int x = 0; x < labels.w; ++x) out.at(y, x) = labels.at(y, x);
  return out;
}

Tensor flip_horizontal(const Tensor& image) {
  require_chw(image, "flip_horizontal");
  int ch = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out(image.shape());
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[(static_cast<int64_t>(c) * h + y) * w + x] =
            image[(static_cast<int64_t>(c) * h + y) * w + (w - 1 - x)];
  return out;
}

Raster flip_horizontal(const Raster& labels) {
  Raster out(labels.h, labels.w);
  for (int y = 0; y < labels.h; ++y)
    for (int x = 0; x < labels.w; ++x) out.at(y, x) = labels.at(y, labels.w - 1 - x);
  return out;
}

Sample random_crop_flip(const Sample& sample, int crop, const std::array<double, 3>& channel_means,
                        int ignore_value, Rng& rng) {
  require(crop >= 1, ErrorKind::invalid_config, "random_crop_flip: crop must be >= 1");
  Sample s;
  s.id = sample.id;
  int h = sample.labels.h, w = sample.labels.w;
  int ph = std::max(h, crop), pw = std::max(w, crop);
  Tensor image = pad_to_mean(sample.image, ph, pw, channel_means);
  Raster labels = pad_labels(sample.labels, ph, pw, ignore_value);

  int y0 = rng.uniform_int(0, ph - crop);
  int x0 = rng.uniform_int(0, pw - crop);
  bool flip = rng.bernoulli(0.5);

  s.image = Tensor({3, crop, crop});
  s.labels = Raster(crop, crop);
  for (int y = 0; y < crop; ++y)
    for (int x = 0; x < crop; ++x) {
      int sx = flip ? x0 + crop - 1 - x : x0 + x;
      s.labels.at(y, x) = labels.at(y0 + y, sx);
      for (int c = 0; c < 3; ++c)
        s.image[(static_cast<int64_t>(c) * crop + y) * crop + x] =
            image[(static_cast<int64_t>(c) * ph + (y0 + y)) * pw + sx];
    }
  return s;
}

Tensor resize_bilinear_image(const Tensor& image, int out_h, int out_w) {
  require_chw(image, "resize_bilinear_image");
  require(out_h >= 1 && out_w >= 1, ErrorKind::shape_mismatch,
          "resize_bilinear_image: target extents must be positive");
  int ch = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (out_h == h && out_w == w) return image;
  auto src = [](int o, int out, int in) {
    return (out <= 1 || in <= 1) ? 0.0
                                 : static_cast<double>(o) * (in - 1) / static_cast<double>(out - 1);
  };
  Tensor out({ch, out_h, out_w});
  for (int y = 0; y < out_h; ++y) {
    double fy = src(y, out_h, h);
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, h - 1);
    double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      double fx = src(x, out_w, w);
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, w - 1);
      double wx = fx - x0;
      for (int c = 0; c < ch; ++c) {
        auto px = [&](int yy, int xx) {
          return image[(static_cast<int64_t>(c) * h + yy) * w + xx];
        };
        double top = px(y0, x0) * (1.0 - wx) + px(y0, x1) * wx;
        double bot = px(y1, x0) * (1.0 - wx) + px(y1, x1) * wx;
        out[(static_cast<int64_t>(c) * out_h + y) * out_w + x] = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace fdnet::data
