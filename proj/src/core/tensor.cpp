#include "core/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace fdnet {

namespace {

constexpr char kMagic[8] = {'F', 'D', 'T', 'E', 'N', 'S', 'R', '1'};

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) fail(ErrorKind::io, "tensor read: truncated header");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  uint64_t u = std::bit_cast<uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) fail(ErrorKind::io, "tensor read: truncated payload");
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

constexpr bool kLittleEndian = std::endian::native == std::endian::little;

}  // namespace

std::string shape_to_string(const std::vector<int>& shape) {
  if (shape.empty()) return "()";
  std::string s;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s;
}

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 1) fail(ErrorKind::shape_mismatch, cat("invalid extent in shape ", shape_to_string(shape)));
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<int64_t>(data_.size()))
    fail(ErrorKind::shape_mismatch,
         cat("tensor data length ", data_.size(), " does not match shape ", shape_str()));
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

void Tensor::scale_(double s) {
  for (double& x : data_) x *= s;
}

void Tensor::add_(const Tensor& o) {
  if (!same_shape(o))
    fail(ErrorKind::shape_mismatch, cat("add_: shape ", shape_str(), " vs ", o.shape_str()));
  const double* src = o.data();
  double* dst = data();
  for (int64_t i = 0, n = size(); i < n; ++i) dst[i] += src[i];
}

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

void Tensor::write(std::ostream& os) const {
  os.write(kMagic, 8);
  put_u32(os, static_cast<uint32_t>(shape_.size()));
  for (int d : shape_) put_u32(os, static_cast<uint32_t>(d));
  if (kLittleEndian) {
    os.write(reinterpret_cast<const char*>(data_.data()),
             static_cast<std::streamsize>(data_.size() * sizeof(double)));
  } else {
    for (double v : data_) put_f64(os, v);
  }
  if (!os) fail(ErrorKind::io, "tensor write failed");
}

Tensor Tensor::read(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    fail(ErrorKind::io, "tensor read: bad magic (expected FDTENSR1)");
  uint32_t rank = get_u32(is);
  if (rank > 8) fail(ErrorKind::io, cat("tensor read: implausible rank ", rank));
  std::vector<int> shape(rank);
  for (uint32_t i = 0; i < rank; ++i) {
    uint32_t d = get_u32(is);
    if (d < 1 || d > (1u << 28)) fail(ErrorKind::io, cat("tensor read: bad extent ", d));
    shape[i] = static_cast<int>(d);
  }
  int64_t n = shape_numel(shape);
  std::vector<double> data(static_cast<size_t>(n));
  if (kLittleEndian) {
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!is) fail(ErrorKind::io, "tensor read: truncated payload");
  } else {
    for (int64_t i = 0; i < n; ++i) data[static_cast<size_t>(i)] = get_f64(is);
  }
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace fdnet
