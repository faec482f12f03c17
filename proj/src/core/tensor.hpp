#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace fdnet {

std::string shape_to_string(const std::vector<int>& shape);
int64_t shape_numel(const std::vector<int>& shape);

/// Dense N-dimensional array of 64-bit floats, row-major. Image tensors use
/// NCHW order.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor full(std::vector<int> shape, double v);
  static Tensor scalar(double v);

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  // NCHW accessors, rank-4 only.
  int n() const { return dim(0); }
  int c() const { return dim(1); }
  int h() const { return dim(2); }
  int w() const { return dim(3); }
  double& at(int n, int c, int y, int x) {
    return data_[((static_cast<int64_t>(n) * dim(1) + c) * dim(2) + y) * dim(3) + x];
  }
  double at(int n, int c, int y, int x) const {
    return data_[((static_cast<int64_t>(n) * dim(1) + c) * dim(2) + y) * dim(3) + x];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const { return shape_to_string(shape_); }

  void fill(double v);
  void zero() { fill(0.0); }
  void scale_(double s);
  void add_(const Tensor& o);
  bool all_finite() const;

  /// Flat binary format: 8-byte magic FDTENSR1, u32 rank, u32 extents
  /// (little-endian), then the raw little-endian f64 payload.
  void write(std::ostream& os) const;
  static Tensor read(std::istream& is);

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace fdnet
