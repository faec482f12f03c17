#include <algorithm>
#include <cmath>

#include "core/ops.hpp"

namespace fdnet {

namespace {

using detail::require;

struct ReluNode final : Node {
  const char* op_name() const override { return "relu"; }
  void backward() override {
    Tensor& gx = inputs[0]->grad_buf();
    const Tensor& x = inputs[0]->value;
    for (int64_t i = 0, n = x.size(); i < n; ++i)
      if (x[i] > 0.0) gx[i] += grad[i];
  }
};

struct AddNode final : Node {
  const char* op_name() const override { return "add"; }
  void backward() override {
    for (auto& in : inputs)
      if (in->requires_grad) in->grad_buf().add_(grad);
  }
};

struct MulNode final : Node {
  const char* op_name() const override { return "mul"; }
  void backward() override {
    const Tensor& a = inputs[0]->value;
    const Tensor& b = inputs[1]->value;
    if (inputs[0]->requires_grad) {
      Tensor& ga = inputs[0]->grad_buf();
      for (int64_t i = 0, n = a.size(); i < n; ++i) ga[i] += grad[i] * b[i];
    }
    if (inputs[1]->requires_grad) {
      Tensor& gb = inputs[1]->grad_buf();
      for (int64_t i = 0, n = b.size(); i < n; ++i) gb[i] += grad[i] * a[i];
    }
  }
};

struct SumAllNode final : Node {
  const char* op_name() const override { return "sum"; }
  void backward() override {
    Tensor& gx = inputs[0]->grad_buf();
    double g = grad[0];
    for (int64_t i = 0, n = gx.size(); i < n; ++i) gx[i] += g;
  }
};

struct ReshapeNode final : Node {
  const char* op_name() const override { return "reshape"; }
  void backward() override {
    Tensor& gx = inputs[0]->grad_buf();
    for (int64_t i = 0, n = gx.size(); i < n; ++i) gx[i] += grad[i];
  }
};

struct ConcatNode final : Node {
  std::vector<int> channel_offsets;  // per input, plus total at the back
  const char* op_name() const override { return "concat_channels"; }
  void backward() override {
    int n = value.n(), h = value.h(), w = value.w();
    int total_c = value.c();
    int64_t plane = static_cast<int64_t>(h) * w;
    for (size_t k = 0; k < inputs.size(); ++k) {
      if (!inputs[k]->requires_grad) continue;
      Tensor& gx = inputs[k]->grad_buf();
      int c0 = channel_offsets[k];
      int ck = channel_offsets[k + 1] - c0;
      for (int b = 0; b < n; ++b) {
        const double* src = grad.data() + (static_cast<int64_t>(b) * total_c + c0) * plane;
        double* dst = gx.data() + static_cast<int64_t>(b) * ck * plane;
        for (int64_t i = 0; i < static_cast<int64_t>(ck) * plane; ++i) dst[i] += src[i];
      }
    }
  }
};

struct SoftmaxNode final : Node {
  const char* op_name() const override { return "softmax_channels"; }
  void backward() override {
    Tensor& gx = inputs[0]->grad_buf();
    const Tensor& p = value;
    int n = p.n(), c = p.c(), h = p.h(), w = p.w();
    int64_t plane = static_cast<int64_t>(h) * w;
    for (int b = 0; b < n; ++b) {
      for (int64_t i = 0; i < plane; ++i) {
        const double* pp = p.data() + static_cast<int64_t>(b) * c * plane + i;
        const double* gp = grad.data() + static_cast<int64_t>(b) * c * plane + i;
        double dot = 0.0;
        for (int ch = 0; ch < c; ++ch) dot += gp[ch * plane] * pp[ch * plane];
        double* gxp = gx.data() + static_cast<int64_t>(b) * c * plane + i;
        for (int ch = 0; ch < c; ++ch) gxp[ch * plane] += pp[ch * plane] * (gp[ch * plane] - dot);
      }
    }
  }
};

bool any_requires_grad(const std::vector<Value>& xs) {
  for (const auto& x : xs)
    if (x->requires_grad) return true;
  return false;
}

}  // namespace

Value relu(const Value& x) {
  auto n = std::make_shared<ReluNode>();
  n->inputs = {x};
  n->requires_grad = x->requires_grad;
  n->value = Tensor(x->value.shape());
  for (int64_t i = 0, m = x->value.size(); i < m; ++i)
    n->value[i] = x->value[i] > 0.0 ? x->value[i] : 0.0;
  check_finite_debug(n->value, "relu");
  return n;
}

Value add(const Value& a, const Value& b) {
  require(a->value.same_shape(b->value), ErrorKind::shape_mismatch,
          cat("add: shape ", a->value.shape_str(), " vs ", b->value.shape_str()));
  auto n = std::make_shared<AddNode>();
  n->inputs = {a, b};
  n->requires_grad = a->requires_grad || b->requires_grad;
  n->value = Tensor(a->value.shape());
  for (int64_t i = 0, m = n->value.size(); i < m; ++i) n->value[i] = a->value[i] + b->value[i];
  check_finite_debug(n->value, "add");
  return n;
}

Value mul(const Value& a, const Value& b) {
  require(a->value.same_shape(b->value), ErrorKind::shape_mismatch,
          cat("mul: shape ", a->value.shape_str(), " vs ", b->value.shape_str()));
  auto n = std::make_shared<MulNode>();
  n->inputs = {a, b};
  n->requires_grad = a->requires_grad || b->requires_grad;
  n->value = Tensor(a->value.shape());
  for (int64_t i = 0, m = n->value.size(); i < m; ++i) n->value[i] = a->value[i] * b->value[i];
  check_finite_debug(n->value, "mul");
  return n;
}

Value sum_all(const Value& x) {
  auto n = std::make_shared<SumAllNode>();
  n->inputs = {x};
  n->requires_grad = x->requires_grad;
  double s = 0.0;
  for (int64_t i = 0, m = x->value.size(); i < m; ++i) s += x->value[i];
  n->value = Tensor::scalar(s);
  check_finite_debug(n->value, "sum");
  return n;
}

Value reshape(const Value& x, std::vector<int> shape) {
  require(shape_numel(shape) == x->value.size(), ErrorKind::shape_mismatch,
          cat("reshape: cannot view ", x->value.shape_str(), " as ", shape_to_string(shape)));
  auto n = std::make_shared<ReshapeNode>();
  n->inputs = {x};
  n->requires_grad = x->requires_grad;
  n->value = Tensor(std::move(shape), std::vector<double>(x->value.data(),
                                                          x->value.data() + x->value.size()));
  return n;
}

Value concat_channels(const std::vector<Value>& xs) {
  require(!xs.empty(), ErrorKind::shape_mismatch, "concat_channels: no inputs");
  const Tensor& first = xs[0]->value;
  require(first.rank() == 4, ErrorKind::shape_mismatch,
          cat("concat_channels: expected rank-4 input, got ", first.shape_str()));
  int n = first.n(), h = first.h(), w = first.w();
  int total_c = 0;
  for (const auto& x : xs) {
    const Tensor& t = x->value;
    bool ok = t.rank() == 4 && t.n() == n && t.h() == h && t.w() == w;
    if (!ok) {
      std::string sizes;
      for (const auto& xi : xs) sizes += " " + xi->value.shape_str();
      fail(ErrorKind::shape_mismatch, cat("concat_channels: spatial mismatch across inputs:", sizes));
    }
    total_c += t.c();
  }
  auto node = std::make_shared<ConcatNode>();
  node->inputs = xs;
  node->requires_grad = any_requires_grad(xs);
  node->value = Tensor({n, total_c, h, w});
  node->channel_offsets.resize(xs.size() + 1);
  int64_t plane = static_cast<int64_t>(h) * w;
  int off = 0;
  for (size_t k = 0; k < xs.size(); ++k) {
    node->channel_offsets[k] = off;
    int ck = xs[k]->value.c();
    for (int b = 0; b < n; ++b) {
      const double* src = xs[k]->value.data() + static_cast<int64_t>(b) * ck * plane;
      double* dst = node->value.data() + (static_cast<int64_t>(b) * total_c + off) * plane;
      std::copy(src, src + static_cast<int64_t>(ck) * plane, dst);
    }
    off += ck;
  }
  node->channel_offsets[xs.size()] = off;
  return node;
}

Value softmax_channels(const Value& x) {
  const Tensor& t = x->value;
  require(t.rank() == 4, ErrorKind::shape_mismatch,
          cat("softmax_channels: expected rank-4 input, got ", t.shape_str()));
  require(t.c() >= 2, ErrorKind::shape_mismatch,
          cat("softmax_channels: need at least 2 channels, got ", t.c()));
  auto node = std::make_shared<SoftmaxNode>();
  node->inputs = {x};
  node->requires_grad = x->requires_grad;
  node->value = Tensor(t.shape());
  int n = t.n(), c = t.c(), h = t.h(), w = t.w();
  int64_t plane = static_cast<int64_t>(h) * w;
  for (int b = 0; b < n; ++b) {
    for (int64_t i = 0; i < plane; ++i) {
      const double* xp = t.data() + static_cast<int64_t>(b) * c * plane + i;
      double* yp = node->value.data() + static_cast<int64_t>(b) * c * plane + i;
      double mx = xp[0];
      for (int ch = 1; ch < c; ++ch) mx = std::max(mx, xp[ch * plane]);
      double sum = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        double e = std::exp(xp[ch * plane] - mx);
        yp[ch * plane] = e;
        sum += e;
      }
      for (int ch = 0; ch < c; ++ch) yp[ch * plane] /= sum;
    }
  }
  check_finite_debug(node->value, "softmax_channels");
  return node;
}

}  // namespace fdnet
