#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "core/ops.hpp"
#include "data/augment.hpp"
#include "data/dataset.hpp"
#include "data/netpbm.hpp"
#include "testutil.hpp"

using namespace fdnet;
using namespace fdnet::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / "fdnet_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(static_cast<bool>(is));
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os << bytes;
}

}  // namespace

TEST_CASE("netpbm round trips and header validation") {
  fs::path dir = scratch_dir("netpbm");

  SUBCASE("ppm write-read-write is byte identical") {
    fdnet::Rng rng(7);
    Tensor img = testutil::random_tensor({3, 16, 16}, rng, 0.0, 1.0);
    fs::path a = dir / "a.ppm", b = dir / "b.ppm";
    write_ppm(img, a.string());
    Tensor back = read_ppm(a.string());
    write_ppm(back, b.string());
    CHECK(read_file(a) == read_file(b));
    // quantization error of a single byte round trip
    CHECK(testutil::max_abs_diff(img, back) <= 0.5 / 255.0 + 1e-12);
  }
  SUBCASE("pgm round trips raw label values including 255") {
    Raster labels(3, 4);
    int32_t vals[] = {0, 1, 2, 3, 255, 254, 7, 0, 9, 200, 31, 255};
    for (int i = 0; i < 12; ++i) labels.v[static_cast<size_t>(i)] = vals[i];
    fs::path p = dir / "l.pgm";
    write_pgm(labels, p.string());
    Raster back = read_pgm(p.string());
    CHECK(back.v == labels.v);
  }
  SUBCASE("1x1 white ppm decodes to ones") {
    fs::path p = dir / "white.ppm";
    write_file(p, std::string("P6\n1 1\n255\n") + "\xff\xff\xff");
    Tensor img = read_ppm(p.string());
    REQUIRE(img.shape() == std::vector<int>{3, 1, 1});
    for (int c = 0; c < 3; ++c) CHECK(img[c] == 1.0);
  }
  SUBCASE("maxval other than 255 is rejected") {
    fs::path p = dir / "wide.pgm";
    write_file(p, "P5\n2 2\n65535\n\0\0\0\0\0\0\0\0");
    try {
      read_pgm(p.string());
      FAIL_CHECK("expected unsupported-maxval error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
      CHECK(std::string(e.what()).find("maxval") != std::string::npos);
    }
  }
  SUBCASE("malformed header and truncated body are rejected") {
    fs::path bad = dir / "bad.ppm";
    write_file(bad, "P3\n2 2\n255\n");
    CHECK_THROWS_AS(read_ppm(bad.string()), Error);
    write_file(bad, "P6\nabc\n");
    CHECK_THROWS_AS(read_ppm(bad.string()), Error);
    write_file(bad, "P6\n4 4\n255\nshort");
    try {
      read_ppm(bad.string());
      FAIL_CHECK("expected truncated-body error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
    CHECK_THROWS_AS(read_ppm((dir / "missing.ppm").string()), Error);
  }
  SUBCASE("header comments are tolerated") {
    fs::path p = dir / "comment.pgm";
    write_file(p, std::string("P5\n# a comment\n2 1\n255\n") + "\x05\x09");
    Raster r = read_pgm(p.string());
    CHECK(r.at(0, 0) == 5);
    CHECK(r.at(0, 1) == 9);
  }
}

TEST_CASE("synthetic samples are deterministic and pixel-exact") {
  SyntheticSpec spec;
  spec.seed = 7;
  spec.count = 8;
  spec.canvas = 48;

  SUBCASE("same spec gives identical samples") {
    for (int i = 0; i < 3; ++i) {
      Sample a = make_sample(spec, i);
      Sample b = make_sample(spec, i);
      CHECK(a.labels.v == b.labels.v);
      CHECK(testutil::max_abs_diff(a.image, b.image) == 0.0);
      CHECK(a.id == b.id);
    }
    CHECK(make_sample(spec, 0).id == "0000");
    CHECK(make_sample(spec, 12).id == "0012");
  }
  SUBCASE("labels equal an independent repaint of the drawn shapes") {
    for (int i = 0; i < 6; ++i) {
      std::vector<Shape> shapes = sample_shapes(spec, i);
      REQUIRE(!shapes.empty());
      Raster want(spec.canvas, spec.canvas, 0);
      for (const Shape& s : shapes)
        for (int y = 0; y < spec.canvas; ++y)
          for (int x = 0; x < spec.canvas; ++x)
            if (shape_contains(s, x + 0.5, y + 0.5)) want.at(y, x) = s.cls;
      CHECK(make_sample(spec, i).labels.v == want.v);
    }
  }
  SUBCASE("single disk sample mass equals the rasterized disk area") {
    SyntheticSpec one = spec;
    one.class_count = 2;  // only disks
    one.min_shapes = one.max_shapes = 1;
    std::vector<Shape> shapes = sample_shapes(one, 3);
    REQUIRE(shapes.size() == 1);
    REQUIRE(shapes[0].cls == 1);
    int64_t area = 0;
    for (int y = 0; y < one.canvas; ++y)
      for (int x = 0; x < one.canvas; ++x) {
        double dx = x + 0.5 - shapes[0].x[0], dy = y + 0.5 - shapes[0].y[0];
        if (dx * dx + dy * dy <= shapes[0].r * shapes[0].r) ++area;
      }
    Sample s = make_sample(one, 3);
    int64_t mass = 0;
    for (int32_t v : s.labels.v) mass += v == 1;
    CHECK(mass == area);
    CHECK(mass > 0);
  }
  SUBCASE("class histogram over 64 samples covers all classes") {
    SyntheticSpec many = spec;
    many.count = 64;
    std::set<int32_t> seen;
    for (int i = 0; i < many.count; ++i) {
      Sample s = make_sample(many, i);
      for (int32_t v : s.labels.v) seen.insert(v);
    }
    CHECK(seen == std::set<int32_t>{0, 1, 2, 3});
  }
  SUBCASE("images stay in [0,1]") {
    Sample s = make_sample(spec, 1);
    for (int64_t i = 0; i < s.image.size(); ++i) {
      CHECK(s.image[i] >= 0.0);
      CHECK(s.image[i] <= 1.0);
    }
  }
  SUBCASE("spec validation uses field paths") {
    SyntheticSpec bad = spec;
    bad.canvas = 16;
    try {
      bad.validate();
      FAIL_CHECK("expected canvas error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("synthetic.canvas") != std::string::npos);
    }
    bad = spec;
    bad.class_count = 9;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = spec;
    bad.max_size = 0.6;
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}

TEST_CASE("dataset generation writes a loadable, reproducible directory") {
  SyntheticSpec spec;
  spec.seed = 7;
  spec.count = 6;
  spec.canvas = 40;

  fs::path d1 = scratch_dir("ds1"), d2 = scratch_dir("ds2");
  generate_dataset(spec, d1.string());
  generate_dataset(spec, d2.string());

  SUBCASE("same seed twice gives byte-identical trees") {
    int files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(d1)) {
      if (!entry.is_regular_file()) continue;
      fs::path rel = fs::relative(entry.path(), d1);
      CHECK(read_file(entry.path()) == read_file(d2 / rel));
      ++files;
    }
    CHECK(files == 2 * spec.count + 1);  // images + labels + manifest
  }
  SUBCASE("open and load round trip the quantized samples") {
    Dataset ds = Dataset::open(d1.string());
    CHECK(ds.size() == spec.count);
    CHECK(ds.meta().class_count == spec.class_count);
    CHECK(ds.meta().ignore_value == 255);
    Sample gen = make_sample(spec, 2);
    Sample got = ds.load(2);
    CHECK(got.id == gen.id);
    CHECK(got.labels.v == gen.labels.v);
    CHECK(testutil::max_abs_diff(got.image, gen.image) <= 0.5 / 255.0 + 1e-12);

    // stored channel means equal the mean over the files as re-read
    std::array<double, 3> sums = {0, 0, 0};
    int64_t n = 0;
    for (int i = 0; i < ds.size(); ++i) {
      Sample s = ds.load(i);
      int64_t hw = static_cast<int64_t>(s.labels.h) * s.labels.w;
      for (int c = 0; c < 3; ++c)
        for (int64_t p = 0; p < hw; ++p) sums[static_cast<size_t>(c)] += s.image[c * hw + p];
      n += hw;
    }
    for (int c = 0; c < 3; ++c)
      CHECK(ds.meta().channel_means[static_cast<size_t>(c)] ==
            doctest::Approx(sums[static_cast<size_t>(c)] / static_cast<double>(n)).epsilon(1e-12));
  }
  SUBCASE("labels outside the class range are rejected at load") {
    Dataset ds = Dataset::open(d1.string());
    Raster bad(spec.canvas, spec.canvas, spec.class_count + 3);
    write_pgm(bad, (d1 / "labels" / "0001.pgm").string());
    CHECK_THROWS_AS(ds.load(1), Error);
    CHECK_NOTHROW(ds.load(0));
  }
  SUBCASE("manifest with unknown keys is rejected") {
    std::string text = read_file(d1 / "manifest.json");
    text.insert(text.find('{') + 1, "\"extra\": 1,");
    write_file(d1 / "manifest.json", text);
    CHECK_THROWS_AS(Dataset::open(d1.string()), Error);
  }
}

TEST_CASE("pad_to_mean and pad_labels") {
  Tensor img({3, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  std::array<double, 3> means = {0.5, 0.5, 0.5};

  SUBCASE("identity at target size") {
    Tensor same = pad_to_mean(img, 2, 2, means);
    CHECK(testutil::max_abs_diff(same, img) == 0.0);
  }
  SUBCASE("padding pixels take the channel mean") {
    Tensor out = pad_to_mean(img, 4, 4, means);
    REQUIRE(out.shape() == std::vector<int>{3, 4, 4});
    int padded = 0, content = 0;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
          double v = out[(static_cast<int64_t>(c) * 4 + y) * 4 + x];
          if (y < 2 && x < 2) {
            CHECK(v == img[(static_cast<int64_t>(c) * 2 + y) * 2 + x]);
            ++content;
          } else {
            CHECK(v == 0.5);
            ++padded;
          }
        }
    CHECK(padded == 3 * 12);
    CHECK(content == 3 * 4);
  }
  SUBCASE("distinct means land in their own channels") {
    Tensor out = pad_to_mean(img, 2, 3, {0.25, 0.5, 0.75});
    CHECK(out[(0 * 2 + 0) * 3 + 2] == 0.25);
    CHECK(out[(1 * 2 + 1) * 3 + 2] == 0.5);
    CHECK(out[(2 * 2 + 0) * 3 + 2] == 0.75);
  }
  SUBCASE("shrink requests fail") {
    CHECK_THROWS_AS(pad_to_mean(img, 1, 4, means), Error);
    CHECK_THROWS_AS(pad_labels(Raster(4, 4), 4, 3, 255), Error);
  }
  SUBCASE("label padding uses ignore") {
    Raster labels(2, 2, 1);
    Raster out = pad_labels(labels, 3, 3, 255);
    CHECK(out.at(0, 0) == 1);
    CHECK(out.at(2, 2) == 255);
    CHECK(out.at(0, 2) == 255);
  }
  SUBCASE("crop-back after padding recovers the original exactly") {
    Tensor out = pad_to_mean(img, 7, 5, means);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x)
          CHECK(out[(static_cast<int64_t>(c) * 7 + y) * 5 + x] ==
                img[(static_cast<int64_t>(c) * 2 + y) * 2 + x]);
  }
}

TEST_CASE("random_crop_flip geometry") {
  std::array<double, 3> means = {-1.0, -2.0, -3.0};

  // coordinate-encoding sample: channel 0 carries the row, channel 1 the
  // column, labels carry y*W + x
  auto coord_sample = [](int h, int w) {
    Sample s;
    s.image = Tensor({3, h, w});
    s.labels = Raster(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        s.labels.at(y, x) = y * w + x;
        s.image[(0 * static_cast<int64_t>(h) + y) * w + x] = y;
        s.image[(1 * static_cast<int64_t>(h) + y) * w + x] = x;
      }
    return s;
  };

  SUBCASE("image and labels move together, including under flip and padding") {
    int h = 20, w = 26, crop = 24;  // crop forces vertical padding via max()
    const int pad_sentinel = 1 << 20;  // outside the coordinate-label range
    Sample s = coord_sample(h, w);
    fdnet::Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      Sample a = random_crop_flip(s, crop, means, pad_sentinel, rng);
      REQUIRE(a.labels.h == crop);
      REQUIRE(a.labels.w == crop);
      for (int y = 0; y < crop; ++y)
        for (int x = 0; x < crop; ++x) {
          double iy = a.image[(0 * static_cast<int64_t>(crop) + y) * crop + x];
          double ix = a.image[(1 * static_cast<int64_t>(crop) + y) * crop + x];
          if (a.labels.at(y, x) == pad_sentinel) {
            CHECK(iy == -1.0);  // padded image pixel carries the channel mean
            CHECK(ix == -2.0);
          } else {
            CHECK(a.labels.at(y, x) == static_cast<int32_t>(iy) * w + static_cast<int32_t>(ix));
          }
        }
    }
  }
  SUBCASE("crop at full size with flip drawn false is the identity") {
    Sample s = coord_sample(8, 8);
    uint64_t seed = 0;
    for (; seed < 1000; ++seed) {  // find a seed whose third draw is no-flip
      fdnet::Rng probe(seed);
      probe.uniform_int(0, 0);
      probe.uniform_int(0, 0);
      if (!probe.bernoulli(0.5)) break;
    }
    fdnet::Rng rng(seed);
    Sample a = random_crop_flip(s, 8, means, 255, rng);
    CHECK(a.labels.v == s.labels.v);
    CHECK(testutil::max_abs_diff(a.image, s.image) == 0.0);
  }
  SUBCASE("flip is an involution") {
    fdnet::Rng rng(12);
    Tensor img = testutil::random_tensor({3, 5, 9}, rng);
    CHECK(testutil::max_abs_diff(flip_horizontal(flip_horizontal(img)), img) == 0.0);
    Sample s = coord_sample(6, 7);
    Raster flipped = flip_horizontal(s.labels);
    CHECK(flipped.at(0, 0) == s.labels.at(0, 6));
    CHECK(flip_horizontal(flipped).v == s.labels.v);
  }
  SUBCASE("windows are reproducible from the seed") {
    Sample s = coord_sample(16, 16);
    fdnet::Rng r1(99), r2(99);
    for (int i = 0; i < 5; ++i) {
      Sample a = random_crop_flip(s, 8, means, 255, r1);
      Sample b = random_crop_flip(s, 8, means, 255, r2);
      CHECK(a.labels.v == b.labels.v);
      CHECK(testutil::max_abs_diff(a.image, b.image) == 0.0);
    }
  }
}

TEST_CASE("resize_bilinear_image") {
  fdnet::Rng rng(13);

  SUBCASE("identity at equal extents") {
    Tensor img = testutil::random_tensor({3, 6, 7}, rng);
    CHECK(testutil::max_abs_diff(resize_bilinear_image(img, 6, 7), img) == 0.0);
  }
  SUBCASE("2x2 to 3x3 closed form") {
    Tensor img({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
    Tensor out = resize_bilinear_image(img, 3, 3);
    CHECK(out[0] == 1.0);
    CHECK(out[2] == 2.0);
    CHECK(out[6] == 3.0);
    CHECK(out[8] == 4.0);
    CHECK(out[4] == doctest::Approx(2.5).epsilon(1e-15));  // center = mean of corners
    CHECK(out[1] == doctest::Approx(1.5).epsilon(1e-15));
  }
  SUBCASE("matches the autodiff upsample op") {
    Tensor img = testutil::random_tensor({4, 5, 6}, rng);
    Tensor batched({1, 4, 5, 6}, std::vector<double>(img.data(), img.data() + img.size()));
    Value up = bilinear_upsample(make_leaf(batched), 11, 9);
    Tensor got = resize_bilinear_image(img, 11, 9);
    double m = 0.0;
    for (int64_t i = 0; i < got.size(); ++i)
      m = std::max(m, std::abs(got[i] - up->value[i]));
    CHECK(m <= 1e-15);
  }
  SUBCASE("downscale of a constant stays constant") {
    Tensor img = Tensor::full({2, 9, 9}, 0.7);
    Tensor out = resize_bilinear_image(img, 4, 5);
    for (int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("downscale averages consistently: midpoints of a ramp") {
    // 1x1x5 ramp 0..4 resized to 1x1x3 samples positions 0, 2, 4
    Tensor img({1, 1, 5}, {0, 1, 2, 3, 4});
    Tensor out = resize_bilinear_image(img, 1, 3);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(out[2] == 4.0);
  }
}
