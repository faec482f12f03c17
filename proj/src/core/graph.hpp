#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace fdnet {

struct Node;
using Value = std::shared_ptr<Node>;

/// A learnable tensor (or a non-learnable buffer such as batch-norm running
/// statistics) with a stable identifier and a persistent gradient accumulator.
struct Parameter {
  std::string id;
  Tensor value;
  Tensor grad;
  bool learnable = true;
  bool decay = false;  // weight decay applies to this parameter

  Parameter(std::string id_, Tensor v, bool learnable_ = true, bool decay_ = false)
      : id(std::move(id_)), value(std::move(v)), grad(value.shape()), learnable(learnable_),
        decay(decay_) {}
};

using ParamPtr = std::shared_ptr<Parameter>;

/// One recorded operation on the tape. The output tensor is computed eagerly
/// when the node is created; backward() pushes gradient contributions into the
/// inputs' accumulators.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first use during the backward sweep
  bool requires_grad = false;
  std::vector<Value> inputs;

  virtual ~Node() = default;
  virtual const char* op_name() const = 0;
  virtual void backward() {}

  Tensor& grad_buf() {
    if (grad.empty()) grad = Tensor(value.shape());
    return grad;
  }
  bool has_grad() const { return !grad.empty(); }
};

Value make_leaf(Tensor v, bool requires_grad = false);
Value make_param_leaf(const ParamPtr& p);

/// Reverse-mode sweep from a scalar loss node; gradients accumulate additively
/// across fan-out and land in every reachable Parameter's grad buffer.
void backward(const Value& loss);

/// Debug sentinels: when enabled, every op scans its output for NaN/Inf.
/// Defaults to on in debug builds, off when NDEBUG is defined.
bool debug_checks_enabled();
void set_debug_checks(bool enabled);
void check_finite_debug(const Tensor& t, const char* op);

}  // namespace fdnet
