#include <Eigen/Core>

#include "core/ops.hpp"

namespace fdnet {

namespace {

using detail::require;
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using ConstMapRM = Eigen::Map<const MatRM>;

/// Gathers convolution patches of one CHW image into a (C*kh*kw) x (oh*ow)
/// column matrix. Out-of-bounds taps read as zero. The same geometry serves
/// conv2d forward and the transposed-convolution input gradient.
void im2col(const double* img, int c, int h, int w, int kh, int kw, int sh, int sw, int ph, int pw,
            int dh, int dw, int oh, int ow, double* cols) {
  for (int ch = 0; ch < c; ++ch) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        double* row = cols + ((static_cast<int64_t>(ch) * kh + ki) * kw + kj) *
                                 (static_cast<int64_t>(oh) * ow);
        const double* plane = img + static_cast<int64_t>(ch) * h * w;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * sh - ph + ki * dh;
          if (iy < 0 || iy >= h) {
            for (int ox = 0; ox < ow; ++ox) row[oy * ow + ox] = 0.0;
            continue;
          }
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * sw - pw + kj * dw;
            row[oy * ow + ox] = (ix >= 0 && ix < w) ? plane[static_cast<int64_t>(iy) * w + ix] : 0.0;
          }
        }
      }
    }
  }
}

/// Scatter-add inverse of im2col.
void col2im_add(const double* cols, int c, int h, int w, int kh, int kw, int sh, int sw, int ph,
                int pw, int dh, int dw, int oh, int ow, double* img) {
  for (int ch = 0; ch < c; ++ch) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const double* row = cols + ((static_cast<int64_t>(ch) * kh + ki) * kw + kj) *
                                       (static_cast<int64_t>(oh) * ow);
        double* plane = img + static_cast<int64_t>(ch) * h * w;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * sh - ph + ki * dh;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * sw - pw + kj * dw;
            if (ix >= 0 && ix < w) plane[static_cast<int64_t>(iy) * w + ix] += row[oy * ow + ox];
          }
        }
      }
    }
  }
}

struct Conv2dNode final : Node {
  ConvAttrs attrs;
  const char* op_name() const override { return "conv2d"; }
  void backward() override;
};

struct ConvTranspose2dNode final : Node {
  ConvTransposeAttrs attrs;
  const char* op_name() const override { return "conv_transpose2d"; }
  void backward() override;
};

}  // namespace

int conv_out_extent(int in, int k, int stride, int pad, int dil, const char* op) {
  int eff = dil * (k - 1) + 1;
  int out = (in + 2 * pad - eff) / stride + 1;
  if (in + 2 * pad < eff || out < 1)
    fail(ErrorKind::shape_mismatch,
         cat(op, ": degenerate output extent for input ", in, ", kernel ", k, ", stride ", stride,
             ", pad ", pad, ", dilation ", dil));
  return out;
}

Value conv2d(const Value& x, const Value& w, const Value& b, const ConvAttrs& attrs) {
  const Tensor& xt = x->value;
  const Tensor& wt = w->value;
  require(xt.rank() == 4, ErrorKind::shape_mismatch,
          cat("conv2d: expected rank-4 input, got ", xt.shape_str()));
  require(wt.rank() == 4, ErrorKind::shape_mismatch,
          cat("conv2d: expected weight (out, in, kh, kw), got ", wt.shape_str()));
  require(xt.c() == wt.dim(1), ErrorKind::shape_mismatch,
          cat("conv2d: channel mismatch, input has ", xt.c(), " channels but weight expects ",
              wt.dim(1)));
  int n = xt.n(), cin = xt.c(), h = xt.h(), wd = xt.w();
  int cout = wt.dim(0), kh = wt.dim(2), kw = wt.dim(3);
  if (b) {
    require(b->value.rank() == 1 && b->value.dim(0) == cout, ErrorKind::shape_mismatch,
            cat("conv2d: bias shape ", b->value.shape_str(), " does not match ", cout,
                " output channels"));
  }
  int oh = conv_out_extent(h, kh, attrs.stride_h, attrs.pad_h, attrs.dil_h, "conv2d");
  int ow = conv_out_extent(wd, kw, attrs.stride_w, attrs.pad_w, attrs.dil_w, "conv2d");

  auto node = std::make_shared<Conv2dNode>();
  node->attrs = attrs;
  node->inputs = {x, w, b ? b : Value()};
  node->requires_grad = x->requires_grad || w->requires_grad || (b && b->requires_grad);
  node->value = Tensor({n, cout, oh, ow});

  int64_t kdim = static_cast<int64_t>(cin) * kh * kw;
  int64_t odim = static_cast<int64_t>(oh) * ow;
  std::vector<double> cols(static_cast<size_t>(kdim * odim));
  ConstMapRM wm(wt.data(), cout, kdim);
  for (int s = 0; s < n; ++s) {
    im2col(xt.data() + static_cast<int64_t>(s) * cin * h * wd, cin, h, wd, kh, kw, attrs.stride_h,
           attrs.stride_w, attrs.pad_h, attrs.pad_w, attrs.dil_h, attrs.dil_w, oh, ow, cols.data());
    MapRM out(node->value.data() + static_cast<int64_t>(s) * cout * odim, cout, odim);
    out.noalias() = wm * ConstMapRM(cols.data(), kdim, odim);
    if (b) {
      for (int c = 0; c < cout; ++c) out.row(c).array() += b->value[c];
    }
  }
  check_finite_debug(node->value, "conv2d");
  return node;
}

void Conv2dNode::backward() {
  const Value& x = inputs[0];
  const Value& w = inputs[1];
  const Value& b = inputs[2];
  const Tensor& xt = x->value;
  const Tensor& wt = w->value;
  int n = xt.n(), cin = xt.c(), h = xt.h(), wd = xt.w();
  int cout = wt.dim(0), kh = wt.dim(2), kw = wt.dim(3);
  int oh = value.h(), ow = value.w();
  int64_t kdim = static_cast<int64_t>(cin) * kh * kw;
  int64_t odim = static_cast<int64_t>(oh) * ow;

  std::vector<double> cols(static_cast<size_t>(kdim * odim));
  for (int s = 0; s < n; ++s) {
    ConstMapRM gout(grad.data() + static_cast<int64_t>(s) * cout * odim, cout, odim);
    if (w->requires_grad) {
      im2col(xt.data() + static_cast<int64_t>(s) * cin * h * wd, cin, h, wd, kh, kw, attrs.stride_h,
             attrs.stride_w, attrs.pad_h, attrs.pad_w, attrs.dil_h, attrs.dil_w, oh, ow,
             cols.data());
      MapRM gw(w->grad_buf().data(), cout, kdim);
      gw.noalias() += gout * ConstMapRM(cols.data(), kdim, odim).transpose();
    }
    if (x->requires_grad) {
      MapRM gcols(cols.data(), kdim, odim);
      gcols.noalias() = ConstMapRM(wt.data(), cout, kdim).transpose() * gout;
      col2im_add(cols.data(), cin, h, wd, kh, kw, attrs.stride_h, attrs.stride_w, attrs.pad_h,
                 attrs.pad_w, attrs.dil_h, attrs.dil_w, oh, ow,
                 x->grad_buf().data() + static_cast<int64_t>(s) * cin * h * wd);
    }
    if (b && b->requires_grad) {
      Tensor& gb = b->grad_buf();
      for (int c = 0; c < cout; ++c) gb[c] += gout.row(c).sum();
    }
  }
}

Value conv_transpose2d(const Value& x, const Value& w, const ConvTransposeAttrs& attrs) {
  const Tensor& xt = x->value;
  const Tensor& wt = w->value;
  require(xt.rank() == 4, ErrorKind::shape_mismatch,
          cat("conv_transpose2d: expected rank-4 input, got ", xt.shape_str()));
  require(wt.rank() == 4, ErrorKind::shape_mismatch,
          cat("conv_transpose2d: expected weight (in, out, kh, kw), got ", wt.shape_str()));
  require(xt.c() == wt.dim(0), ErrorKind::shape_mismatch,
          cat("conv_transpose2d: channel mismatch, input has ", xt.c(),
              " channels but weight expects ", wt.dim(0)));
  require(attrs.stride_h >= 1 && attrs.stride_w >= 1, ErrorKind::shape_mismatch,
          "conv_transpose2d: stride must be >= 1");
  require(attrs.out_pad_h >= 0 && attrs.out_pad_h < attrs.stride_h && attrs.out_pad_w >= 0 &&
              attrs.out_pad_w < attrs.stride_w,
          ErrorKind::shape_mismatch,
          "conv_transpose2d: output padding must be non-negative and smaller than stride");
  int n = xt.n(), cin = xt.c(), h = xt.h(), wd = xt.w();
  int cout = wt.dim(1), kh = wt.dim(2), kw = wt.dim(3);
  int oh = (h - 1) * attrs.stride_h - 2 * attrs.pad_h + kh + attrs.out_pad_h;
  int ow = (wd - 1) * attrs.stride_w - 2 * attrs.pad_w + kw + attrs.out_pad_w;
  if (oh < 1 || ow < 1)
    fail(ErrorKind::shape_mismatch, cat("conv_transpose2d: degenerate output ", oh, "x", ow));

  auto node = std::make_shared<ConvTranspose2dNode>();
  node->attrs = attrs;
  node->inputs = {x, w};
  node->requires_grad = x->requires_grad || w->requires_grad;
  node->value = Tensor({n, cout, oh, ow});

  int64_t kdim = static_cast<int64_t>(cout) * kh * kw;
  int64_t idim = static_cast<int64_t>(h) * wd;
  std::vector<double> cols(static_cast<size_t>(kdim * idim));
  ConstMapRM wm(wt.data(), cin, kdim);
  for (int s = 0; s < n; ++s) {
    ConstMapRM xin(xt.data() + static_cast<int64_t>(s) * cin * idim, cin, idim);
    MapRM gcols(cols.data(), kdim, idim);
    gcols.noalias() = wm.transpose() * xin;
    col2im_add(cols.data(), cout, oh, ow, kh, kw, attrs.stride_h, attrs.stride_w, attrs.pad_h,
               attrs.pad_w, 1, 1, h, wd,
               node->value.data() + static_cast<int64_t>(s) * cout * oh * ow);
  }
  check_finite_debug(node->value, "conv_transpose2d");
  return node;
}

void ConvTranspose2dNode::backward() {
  const Value& x = inputs[0];
  const Value& w = inputs[1];
  const Tensor& xt = x->value;
  const Tensor& wt = w->value;
  int n = xt.n(), cin = xt.c(), h = xt.h(), wd = xt.w();
  int cout = wt.dim(1), kh = wt.dim(2), kw = wt.dim(3);
  int oh = value.h(), ow = value.w();
  int64_t kdim = static_cast<int64_t>(cout) * kh * kw;
  int64_t idim = static_cast<int64_t>(h) * wd;

  // The gradient w.r.t. x is a plain convolution of the output gradient with
  // the shared kernel (adjointness), realized here as im2col over the output
  // gradient followed by a GEMM.
  std::vector<double> cols(static_cast<size_t>(kdim * idim));
  for (int s = 0; s < n; ++s) {
    im2col(grad.data() + static_cast<int64_t>(s) * cout * oh * ow, cout, oh, ow, kh, kw,
           attrs.stride_h, attrs.stride_w, attrs.pad_h, attrs.pad_w, 1, 1, h, wd, cols.data());
    if (x->requires_grad) {
      MapRM gx(x->grad_buf().data() + static_cast<int64_t>(s) * cin * idim, cin, idim);
      gx.noalias() += ConstMapRM(wt.data(), cin, kdim) * ConstMapRM(cols.data(), kdim, idim);
    }
    if (w->requires_grad) {
      MapRM gw(w->grad_buf().data(), cin, kdim);
      ConstMapRM xin(xt.data() + static_cast<int64_t>(s) * cin * idim, cin, idim);
      gw.noalias() += xin * ConstMapRM(cols.data(), kdim, idim).transpose();
    }
  }
}

}  // namespace fdnet
