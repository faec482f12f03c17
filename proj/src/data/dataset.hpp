#pragma once

#include <array>
#include <string>
#include <vector>

#include "config/json_util.hpp"
#include "core/raster.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace fdnet::data {

constexpr int kIgnoreValue = 255;

struct Sample {
  Tensor image;   // 3xHxW, values in [0,1]
  Raster labels;  // HxW class indices, kIgnoreValue allowed
  std::string id;
};

/// Synthetic shapes dataset: flat background (class 0) plus colored shapes.
/// Shape classes are 1 = disk, 2 = rectangle, 3 = triangle; class_count caps
/// how many are in play (2 = disks only, 4 = all three).
struct SyntheticSpec {
  uint64_t seed = 0;
  int count = 8;
  int canvas = 64;
  int class_count = 4;
  int min_shapes = 1;
  int max_shapes = 3;
  double min_size = 0.12;  // shape radius as a fraction of canvas
  double max_size = 0.30;
  double noise = 0.04;  // per-pixel color jitter amplitude

  void validate() const;
  cfg::Json to_json() const;
  static SyntheticSpec from_json(const cfg::Json& j, const std::string& path);
};

struct Shape {
  int cls = 1;  // 1 disk, 2 rectangle, 3 triangle
  // disk: (x[0],y[0]) center, r radius; rectangle: corners (x[0],y[0])-(x[1],y[1]);
  // triangle: vertices (x[i],y[i])
  double x[3] = {0, 0, 0};
  double y[3] = {0, 0, 0};
  double r = 0;
};

/// Pixel-center containment test used by the rasterizer; (px,py) is the
/// center of pixel (x,y), i.e. (x+0.5, y+0.5).
bool shape_contains(const Shape& s, double px, double py);

/// Paints s.cls over every contained pixel center.
void rasterize_shape(Raster& labels, const Shape& s);

/// The deterministic geometry drawn for sample `index`; the first shape's
/// class cycles through the available shape classes so every class appears.
std::vector<Shape> sample_shapes(const SyntheticSpec& spec, int index);

Sample make_sample(const SyntheticSpec& spec, int index);

struct DatasetMeta {
  int class_count = 0;
  int ignore_value = kIgnoreValue;
  std::array<double, 3> channel_means = {0, 0, 0};
  std::vector<std::string> samples;

  cfg::Json to_json() const;
  static DatasetMeta from_json(const cfg::Json& j, const std::string& path);
};

/// Writes images/NNNN.ppm, labels/NNNN.pgm and manifest.json under dir.
void generate_dataset(const SyntheticSpec& spec, const std::string& dir);

class Dataset {
 public:
  static Dataset open(const std::string& dir);

  int size() const { return static_cast<int>(meta_.samples.size()); }
  const DatasetMeta& meta() const { return meta_; }
  Sample load(int index) const;

 private:
  std::string dir_;
  DatasetMeta meta_;
};

}  // namespace fdnet::data
