#pragma once

#include <string>

#include "core/raster.hpp"
#include "core/tensor.hpp"

namespace fdnet::data {

/// Binary PPM (P6, maxval 255). Images travel as 3xHxW tensors with values in
/// [0,1]; bytes map to v/255 on read and round(clamp(v,0,1)*255) on write, so
/// a written file re-read and re-written is byte-identical.
Tensor read_ppm(const std::string& path);
void write_ppm(const Tensor& image, const std::string& path);

/// Binary PGM (P5, maxval 255). Label rasters carry raw class indices; every
/// value must fit a byte on write.
Raster read_pgm(const std::string& path);
void write_pgm(const Raster& labels, const std::string& path);

}  // namespace fdnet::data
