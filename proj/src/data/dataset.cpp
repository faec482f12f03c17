#include "data/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "data/netpbm.hpp"

namespace fdnet::data {
namespace {

namespace fs = std::filesystem;
using detail::require;

constexpr double kPi = 3.14159265358979323846;

const std::array<std::array<double, 3>, 4> kPalette = {{
    {0.16, 0.18, 0.22},  // background
    {0.80, 0.30, 0.25},  // disk
    {0.28, 0.72, 0.34},  // rectangle
    {0.30, 0.42, 0.82},  // triangle
}};

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// byte quantization identical to write_ppm, so stored channel means can be
// recomputed exactly from the files on disk
double quantized(double v) { return static_cast<double>(std::lround(clamp01(v) * 255.0)) / 255.0; }

struct Plan {
  std::vector<std::array<double, 3>> colors;  // per class, jittered
  std::vector<Shape> shapes;
};

// Consumes a fixed, documented draw sequence: class colors, shape count, then
// per shape (class, radius, center, kind-specific params). Leaves rng
// positioned for the per-pixel noise pass.
Plan draw_plan(const SyntheticSpec& spec, int index, Rng& rng) {
  Plan plan;
  for (int cls = 0; cls < spec.class_count; ++cls) {
    std::array<double, 3> col = kPalette[static_cast<size_t>(cls)];
    for (double& ch : col) ch = clamp01(ch + rng.uniform(-2.0 * spec.noise, 2.0 * spec.noise));
    plan.colors.push_back(col);
  }
  int shape_classes = spec.class_count - 1;
  int n = rng.uniform_int(spec.min_shapes, spec.max_shapes);
  for (int s = 0; s < n; ++s) {
    Shape sh;
    sh.cls = s == 0 ? 1 + index % shape_classes : rng.uniform_int(1, shape_classes);
    sh.r = rng.uniform(spec.min_size, spec.max_size) * spec.canvas;
    double cx = rng.uniform(sh.r, spec.canvas - sh.r);
    double cy = rng.uniform(sh.r, spec.canvas - sh.r);
    if (sh.cls == 1) {
      sh.x[0] = cx;
      sh.y[0] = cy;
    } else if (sh.cls == 2) {
      double ry = rng.uniform(0.5, 1.0) * sh.r;
      sh.x[0] = cx - sh.r;
      sh.y[0] = cy - ry;
      sh.x[1] = cx + sh.r;
      sh.y[1] = cy + ry;
    } else {
      double base = rng.uniform(0.0, 2.0 * kPi);
      for (int k = 0; k < 3; ++k) {
        double theta = base + k * (2.0 * kPi / 3.0) + rng.uniform(-0.3, 0.3);
        sh.x[k] = cx + sh.r * std::cos(theta);
        sh.y[k] = cy + sh.r * std::sin(theta);
      }
    }
    plan.shapes.push_back(sh);
  }
  return plan;
}

}  // namespace

void SyntheticSpec::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    require(ok, ErrorKind::invalid_config, "synthetic." + msg);
  };
  check(count >= 1, "count: must be >= 1");
  check(canvas >= 32, "canvas: must be >= 32");
  check(class_count >= 2 && class_count <= 4,
        "class_count: must be in [2,4] (background + up to 3 shape classes)");
  check(min_shapes >= 1 && min_shapes <= max_shapes, "min_shapes: need 1 <= min <= max");
  check(min_size > 0.0 && min_size <= max_size && max_size <= 0.45,
        "min_size: need 0 < min <= max <= 0.45");
  check(noise >= 0.0 && noise <= 0.2, "noise: must be in [0, 0.2]");
}

cfg::Json SyntheticSpec::to_json() const {
  return cfg::Json{{"seed", seed},           {"count", count},
                   {"canvas", canvas},       {"class_count", class_count},
                   {"min_shapes", min_shapes}, {"max_shapes", max_shapes},
                   {"min_size", min_size},   {"max_size", max_size},
                   {"noise", noise}};
}

SyntheticSpec SyntheticSpec::from_json(const cfg::Json& j, const std::string& path) {
  cfg::require_object(j, path);
  cfg::reject_unknown(j,
                      {"seed", "count", "canvas", "class_count", "min_shapes", "max_shapes",
                       "min_size", "max_size", "noise"},
                      path);
  SyntheticSpec s;
  s.seed = cfg::get_u64_or(j, "seed", path, s.seed);
  s.count = cfg::get_int_or(j, "count", path, s.count);
  s.canvas = cfg::get_int_or(j, "canvas", path, s.canvas);
  s.class_count = cfg::get_int_or(j, "class_count", path, s.class_count);
  s.min_shapes = cfg::get_int_or(j, "min_shapes", path, s.min_shapes);
  s.max_shapes = cfg::get_int_or(j, "max_shapes", path, s.max_shapes);
  s.min_size = cfg::get_double_or(j, "min_size", path, s.min_size);
  s.max_size = cfg::get_double_or(j, "max_size", path, s.max_size);
  s.noise = cfg::get_double_or(j, "noise", path, s.noise);
  s.validate();
  return s;
}

bool shape_contains(const Shape& s, double px, double py) {
  if (s.cls == 1) {
    double dx = px - s.x[0], dy = py - s.y[0];
    return dx * dx + dy * dy <= s.r * s.r;
  }
  if (s.cls == 2) return px >= s.x[0] && px < s.x[1] && py >= s.y[0] && py < s.y[1];
  // triangle: consistent sign of the cross product against all three edges
  double d0 = (s.x[1] - s.x[0]) * (py - s.y[0]) - (s.y[1] - s.y[0]) * (px - s.x[0]);
  double d1 = (s.x[2] - s.x[1]) * (py - s.y[1]) - (s.y[2] - s.y[1]) * (px - s.x[1]);
  double d2 = (s.x[0] - s.x[2]) * (py - s.y[2]) - (s.y[0] - s.y[2]) * (px - s.x[2]);
  bool has_neg = d0 < 0 || d1 < 0 || d2 < 0;
  bool has_pos = d0 > 0 || d1 > 0 || d2 > 0;
  return !(has_neg && has_pos);
}

void rasterize_shape(Raster& labels, const Shape& s) {
  for (int y = 0; y < labels.h; ++y)
    for (int x = 0; x < labels.w; ++x)
      if (shape_contains(s, x + 0.5, y + 0.5)) labels.at(y, x) = s.cls;
}

std::vector<Shape> sample_shapes(const SyntheticSpec& spec, int index) {
  spec.validate();
  Rng rng(hash_stream(spec.seed, static_cast<uint64_t>(index)));
  return draw_plan(spec, index, rng).shapes;
}

Sample make_sample(const SyntheticSpec& spec, int index) {
  spec.validate();
  Rng rng(hash_stream(spec.seed, static_cast<uint64_t>(index)));
  Plan plan = draw_plan(spec, index, rng);

  Sample out;
  out.labels = Raster(spec.canvas, spec.canvas, 0);
  for (const Shape& s : plan.shapes) rasterize_shape(out.labels, s);

  out.image = Tensor({3, spec.canvas, spec.canvas});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < spec.canvas; ++y)
      for (int x = 0; x < spec.canvas; ++x) {
        double base = plan.colors[static_cast<size_t>(out.labels.at(y, x))][static_cast<size_t>(c)];
        double v = clamp01(base + rng.uniform(-spec.noise, spec.noise));
        out.image[(static_cast<int64_t>(c) * spec.canvas + y) * spec.canvas + x] = v;
      }

  std::ostringstream id;
  id.width(4);
  id.fill('0');
  id << index;
  out.id = id.str();
  return out;
}

cfg::Json DatasetMeta::to_json() const {
  return cfg::Json{{"class_count", class_count},
                   {"ignore_value", ignore_value},
                   {"channel_means", channel_means},
                   {"samples", samples}};
}

DatasetMeta DatasetMeta::from_json(const cfg::Json& j, const std::string& path) {
  cfg::require_object(j, path);
  cfg::reject_unknown(j, {"class_count", "ignore_value", "channel_means", "samples"}, path);
  DatasetMeta m;
  m.class_count = cfg::get_int(j, "class_count", path);
  m.ignore_value = cfg::get_int_or(j, "ignore_value", path, kIgnoreValue);
  std::vector<double> means = cfg::get_double_list_or(j, "channel_means", path, {0, 0, 0});
  require(means.size() == 3, ErrorKind::invalid_config,
          cfg::join(path, "channel_means") + ": need exactly 3 values");
  std::copy(means.begin(), means.end(), m.channel_means.begin());
  if (!j.contains("samples") || !j["samples"].is_array())
    fail(ErrorKind::invalid_config, cfg::join(path, "samples") + ": required string list");
  for (const auto& s : j["samples"]) {
    if (!s.is_string())
      fail(ErrorKind::invalid_config, cfg::join(path, "samples") + ": required string list");
    m.samples.push_back(s.get<std::string>());
  }
  require(m.class_count >= 2, ErrorKind::invalid_config,
          cfg::join(path, "class_count") + ": must be >= 2");
  return m;
}

void generate_dataset(const SyntheticSpec& spec, const std::string& dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "images", ec);
  fs::create_directories(fs::path(dir) / "labels", ec);
  require(fs::is_directory(fs::path(dir) / "images") && fs::is_directory(fs::path(dir) / "labels"),
          ErrorKind::io, cat(dir, ": cannot create dataset directories"));

  DatasetMeta meta;
  meta.class_count = spec.class_count;
  std::array<double, 3> sums = {0, 0, 0};
  int64_t per_channel = 0;
  for (int i = 0; i < spec.count; ++i) {
    Sample s = make_sample(spec, i);
    write_ppm(s.image, (fs::path(dir) / "images" / (s.id + ".ppm")).string());
    write_pgm(s.labels, (fs::path(dir) / "labels" / (s.id + ".pgm")).string());
    int64_t hw = static_cast<int64_t>(spec.canvas) * spec.canvas;
    for (int c = 0; c < 3; ++c)
      for (int64_t p = 0; p < hw; ++p)
        sums[static_cast<size_t>(c)] += quantized(s.image[c * hw + p]);
    per_channel += hw;
    meta.samples.push_back(s.id);
  }
  for (int c = 0; c < 3; ++c)
    meta.channel_means[static_cast<size_t>(c)] = sums[static_cast<size_t>(c)] / static_cast<double>(per_channel);

  std::ofstream os((fs::path(dir) / "manifest.json").string(), std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::io, cat(dir, ": cannot write manifest.json"));
  os << meta.to_json().dump(2) << "\n";
}

Dataset Dataset::open(const std::string& dir) {
  std::ifstream is((fs::path(dir) / "manifest.json").string());
  require(static_cast<bool>(is), ErrorKind::io, cat(dir, ": missing manifest.json"));
  std::ostringstream buf;
  buf << is.rdbuf();
  Dataset ds;
  ds.dir_ = dir;
  ds.meta_ = DatasetMeta::from_json(cfg::parse_text(buf.str(), dir + "/manifest.json"), "manifest");
  return ds;
}

Sample Dataset::load(int index) const {
  require(index >= 0 && index < size(), ErrorKind::runtime,
          cat("dataset index ", index, " out of range [0,", size(), ")"));
  const std::string& id = meta_.samples[static_cast<size_t>(index)];
  Sample s;
  s.id = id;
  s.image = read_ppm((fs::path(dir_) / "images" / (id + ".ppm")).string());
  s.labels = read_pgm((fs::path(dir_) / "labels" / (id + ".pgm")).string());
  require(s.image.dim(1) == s.labels.h && s.image.dim(2) == s.labels.w, ErrorKind::shape_mismatch,
          cat(id, ": image and labels disagree on extents"));
  for (int32_t v : s.labels.v)
    require((v >= 0 && v < meta_.class_count) || v == meta_.ignore_value, ErrorKind::runtime,
            cat(id, ": label value ", v, " outside [0,", meta_.class_count, ") and not ignore"));
  return s;
}

}  // namespace fdnet::data
