#include "data/netpbm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

namespace fdnet::data {
namespace {

[[noreturn]] void malformed(const std::string& path, const std::string& why) {
  fail(ErrorKind::io, cat(path, ": malformed netpbm header (", why, ")"));
}

// Reads one whitespace/comment-separated decimal token from a netpbm header.
int read_header_int(std::istream& is, const std::string& path) {
  int c = is.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#')
      while (c != EOF && c != '\n') c = is.get();
    c = is.get();
  }
  if (c == EOF || !std::isdigit(c)) malformed(path, "expected integer");
  int64_t v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1 << 30) malformed(path, "integer out of range");
    c = is.get();
  }
  if (c != EOF) is.unget();
  return static_cast<int>(v);
}

struct Header {
  int w = 0, h = 0;
};

Header read_header(std::istream& is, const std::string& path, const char* magic) {
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  if (!is || m0 != magic[0] || m1 != magic[1])
    malformed(path, cat("expected ", magic, " magic"));
  Header hdr;
  hdr.w = read_header_int(is, path);
  hdr.h = read_header_int(is, path);
  int maxval = read_header_int(is, path);
  if (hdr.w <= 0 || hdr.h <= 0) malformed(path, "non-positive extents");
  if (maxval != 255) fail(ErrorKind::io, cat(path, ": unsupported maxval ", maxval));
  int sep = is.get();
  if (sep == EOF || !std::isspace(sep)) malformed(path, "missing separator before body");
  return hdr;
}

std::vector<unsigned char> read_body(std::istream& is, const std::string& path, size_t n) {
  std::vector<unsigned char> body(n);
  is.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n)
    fail(ErrorKind::io, cat(path, ": truncated netpbm body"));
  return body;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, cat(path, ": cannot open for reading"));
  return is;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::io, cat(path, ": cannot open for writing"));
  return os;
}

unsigned char to_byte(double v) {
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  return static_cast<unsigned char>(std::lround(v * 255.0));
}

}  // namespace

Tensor read_ppm(const std::string& path) {
  std::ifstream is = open_in(path);
  Header hdr = read_header(is, path, "P6");
  std::vector<unsigned char> body =
      read_body(is, path, static_cast<size_t>(hdr.w) * static_cast<size_t>(hdr.h) * 3);
  Tensor img({3, hdr.h, hdr.w});
  for (int y = 0; y < hdr.h; ++y)
    for (int x = 0; x < hdr.w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = body[(static_cast<size_t>(y) * hdr.w + x) * 3 + static_cast<size_t>(c)] / 255.0;
        img[(static_cast<int64_t>(c) * hdr.h + y) * hdr.w + x] = v;
      }
  return img;
}

void write_ppm(const Tensor& image, const std::string& path) {
  detail::require(image.rank() == 3 && image.dim(0) == 3, ErrorKind::shape_mismatch,
                  cat("write_ppm: expected 3xHxW image, got ", image.shape_str()));
  int h = image.dim(1), w = image.dim(2);
  std::ofstream os = open_out(path);
  os << "P6\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> body(static_cast<size_t>(h) * static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        body[(static_cast<size_t>(y) * w + x) * 3 + static_cast<size_t>(c)] =
            to_byte(image[(static_cast<int64_t>(c) * h + y) * w + x]);
  os.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!os) fail(ErrorKind::io, cat(path, ": write failed"));
}

Raster read_pgm(const std::string& path) {
  std::ifstream is = open_in(path);
  Header hdr = read_header(is, path, "P5");
  std::vector<unsigned char> body =
      read_body(is, path, static_cast<size_t>(hdr.w) * static_cast<size_t>(hdr.h));
  Raster labels(hdr.h, hdr.w);
  for (int64_t i = 0; i < labels.size(); ++i) labels.v[static_cast<size_t>(i)] = body[static_cast<size_t>(i)];
  return labels;
}

void write_pgm(const Raster& labels, const std::string& path) {
  std::ofstream os = open_out(path);
  os << "P5\n" << labels.w << " " << labels.h << "\n255\n";
  std::vector<unsigned char> body(static_cast<size_t>(labels.size()));
  for (int64_t i = 0; i < labels.size(); ++i) {
    int32_t v = labels.v[static_cast<size_t>(i)];
    detail::require(v >= 0 && v <= 255, ErrorKind::shape_mismatch,
                    cat("write_pgm: value ", v, " does not fit a byte"));
    body[static_cast<size_t>(i)] = static_cast<unsigned char>(v);
  }
  os.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!os) fail(ErrorKind::io, cat(path, ": write failed"));
}

}  // namespace fdnet::data
