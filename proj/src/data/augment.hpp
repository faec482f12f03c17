#pragma once

#include <array>

#include "data/dataset.hpp"

namespace fdnet::data {

/// Mean-value padding, original content at the top-left. Rejects shrinking.
Tensor pad_to_mean(const Tensor& image, int target_h, int target_w,
                   const std::array<double, 3>& channel_means);
Raster pad_labels(const Raster& labels, int target_h, int target_w, int ignore_value);

/// Horizontal mirror of a CxHxW tensor (any channel count) / label raster.
Tensor flip_horizontal(const Tensor& image);
Raster flip_horizontal(const Raster& labels);

/// Random crop + joint horizontal flip. Samples smaller than the crop are
/// first padded (means for the image, ignore for labels). Draw order: crop
/// row, crop column, flip coin.
Sample random_crop_flip(const Sample& sample, int crop, const std::array<double, 3>& channel_means,
                        int ignore_value, Rng& rng);

/// Plain (non-differentiated) align-corners bilinear resize of a CxHxW
/// tensor; supports both directions and returns a copy when extents match.
Tensor resize_bilinear_image(const Tensor& image, int out_h, int out_w);

}  // namespace fdnet::data
