#include <algorithm>
#include <cmath>

#include "core/ops.hpp"

namespace fdnet {

namespace {

using detail::require;

struct BatchNormNode final : Node {
  bool training = false;
  double eps = 1e-5;
  // Per-channel statistics used by the forward pass; batch stats when
  // training, running stats otherwise.
  std::vector<double> mean, inv_std;
  const char* op_name() const override { return "batch_norm"; }
  void backward() override;
};

struct MaxPoolNode final : Node {
  std::vector<int64_t> argmax;  // flat input index per output element
  const char* op_name() const override { return "max_pool"; }
  void backward() override;
};

struct AvgPoolNode final : Node {
  int kh = 0, kw = 0, sh = 0, sw = 0;
  const char* op_name() const override { return "avg_pool"; }
  void backward() override;
};

struct BilinearUpsampleNode final : Node {
  const char* op_name() const override { return "bilinear_upsample"; }
  void backward() override;
};

/// Align-corners source coordinate for output index `o` of `out` samples over
/// an input extent `in`.
inline double src_coord(int o, int out, int in) {
  if (out <= 1 || in <= 1) return 0.0;
  return static_cast<double>(o) * (in - 1) / (out - 1);
}

}  // namespace

Value batch_norm(const Value& x, const Value& gamma, const Value& beta, Tensor& running_mean,
                 Tensor& running_var, double momentum, double eps, bool training) {
  const Tensor& xt = x->value;
  require(xt.rank() == 4, ErrorKind::shape_mismatch,
          cat("batch_norm: expected rank-4 input, got ", xt.shape_str()));
  int n = xt.n(), c = xt.c(), h = xt.h(), w = xt.w();
  auto check_c = [&](const Tensor& t, const char* name) {
    require(t.rank() == 1 && t.dim(0) == c, ErrorKind::shape_mismatch,
            cat("batch_norm: ", name, " shape ", t.shape_str(), " does not match ", c,
                " channels"));
  };
  check_c(gamma->value, "gamma");
  check_c(beta->value, "beta");
  check_c(running_mean, "running_mean");
  check_c(running_var, "running_var");
  require(eps > 0.0, ErrorKind::invalid_config, "batch_norm: eps must be positive");

  int64_t m = static_cast<int64_t>(n) * h * w;  // values per channel
  if (training && m < 2)
    fail(ErrorKind::shape_mismatch,
         cat("batch_norm: training statistics need at least 2 values per channel, got ", m));

  auto node = std::make_shared<BatchNormNode>();
  node->training = training;
  node->eps = eps;
  node->inputs = {x, gamma, beta};
  node->requires_grad = x->requires_grad || gamma->requires_grad || beta->requires_grad;
  node->value = Tensor(xt.shape());
  node->mean.resize(c);
  node->inv_std.resize(c);

  int64_t plane = static_cast<int64_t>(h) * w;
  for (int ch = 0; ch < c; ++ch) {
    double mu, var;
    if (training) {
      double s = 0.0, s2 = 0.0;
      for (int s_i = 0; s_i < n; ++s_i) {
        const double* p = xt.data() + (static_cast<int64_t>(s_i) * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          s += p[i];
          s2 += p[i] * p[i];
        }
      }
      mu = s / static_cast<double>(m);
      var = s2 / static_cast<double>(m) - mu * mu;  // biased
      if (var < 0.0) var = 0.0;                     // numerical floor
      double unbiased = var * static_cast<double>(m) / static_cast<double>(m - 1);
      running_mean[ch] = (1.0 - momentum) * running_mean[ch] + momentum * mu;
      running_var[ch] = (1.0 - momentum) * running_var[ch] + momentum * unbiased;
    } else {
      mu = running_mean[ch];
      var = running_var[ch];
    }
    node->mean[ch] = mu;
    node->inv_std[ch] = 1.0 / std::sqrt(var + eps);
    double g = gamma->value[ch], b = beta->value[ch], istd = node->inv_std[ch];
    for (int s_i = 0; s_i < n; ++s_i) {
      const double* p = xt.data() + (static_cast<int64_t>(s_i) * c + ch) * plane;
      double* q = node->value.data() + (static_cast<int64_t>(s_i) * c + ch) * plane;
      for (int64_t i = 0; i < plane; ++i) q[i] = g * (p[i] - mu) * istd + b;
    }
  }
  check_finite_debug(node->value, "batch_norm");
  return node;
}

void BatchNormNode::backward() {
  const Value& x = inputs[0];
  const Value& gamma = inputs[1];
  const Value& beta = inputs[2];
  const Tensor& xt = x->value;
  int n = xt.n(), c = xt.c(), h = xt.h(), w = xt.w();
  int64_t plane = static_cast<int64_t>(h) * w;
  int64_t m = static_cast<int64_t>(n) * plane;

  for (int ch = 0; ch < c; ++ch) {
    double mu = mean[ch], istd = inv_std[ch], g = gamma->value[ch];
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int s_i = 0; s_i < n; ++s_i) {
      const double* xp = xt.data() + (static_cast<int64_t>(s_i) * c + ch) * plane;
      const double* gp = grad.data() + (static_cast<int64_t>(s_i) * c + ch) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        sum_dy += gp[i];
        sum_dy_xhat += gp[i] * (xp[i] - mu) * istd;
      }
    }
    if (gamma->requires_grad) gamma->grad_buf()[ch] += sum_dy_xhat;
    if (beta->requires_grad) beta->grad_buf()[ch] += sum_dy;
    if (!x->requires_grad) continue;
    for (int s_i = 0; s_i < n; ++s_i) {
      const double* xp = xt.data() + (static_cast<int64_t>(s_i) * c + ch) * plane;
      const double* gp = grad.data() + (static_cast<int64_t>(s_i) * c + ch) * plane;
      double* dxp = x->grad_buf().data() + (static_cast<int64_t>(s_i) * c + ch) * plane;
      if (training) {
        // dx = g*istd/m * (m*dy - sum(dy) - xhat * sum(dy*xhat))
        double scale = g * istd / static_cast<double>(m);
        for (int64_t i = 0; i < plane; ++i) {
          double xhat = (xp[i] - mu) * istd;
          dxp[i] += scale * (static_cast<double>(m) * gp[i] - sum_dy - xhat * sum_dy_xhat);
        }
      } else {
        double scale = g * istd;  // running stats are constants
        for (int64_t i = 0; i < plane; ++i) dxp[i] += scale * gp[i];
      }
    }
  }
}

namespace {
int pool_out_extent(int in, int k, int s, int p, const char* op) {
  require(k >= 1 && s >= 1 && p >= 0 && p < k, ErrorKind::shape_mismatch,
          cat(op, ": invalid kernel ", k, ", stride ", s, ", pad ", p));
  int out = (in + 2 * p - k) / s + 1;
  if (in + 2 * p < k || out < 1)
    fail(ErrorKind::shape_mismatch,
         cat(op, ": degenerate output extent for input ", in, ", kernel ", k, ", stride ", s,
             ", pad ", p));
  return out;
}
}  // namespace

Value max_pool(const Value& x, int kh, int kw, int sh, int sw, int ph, int pw) {
  const Tensor& xt = x->value;
  require(xt.rank() == 4, ErrorKind::shape_mismatch,
          cat("max_pool: expected rank-4 input, got ", xt.shape_str()));
  int n = xt.n(), c = xt.c(), h = xt.h(), w = xt.w();
  int oh = pool_out_extent(h, kh, sh, ph, "max_pool");
  int ow = pool_out_extent(w, kw, sw, pw, "max_pool");

  auto node = std::make_shared<MaxPoolNode>();
  node->inputs = {x};
  node->requires_grad = x->requires_grad;
  node->value = Tensor({n, c, oh, ow});
  node->argmax.assign(static_cast<size_t>(node->value.size()), -1);

  int64_t out_i = 0;
  for (int s_i = 0; s_i < n; ++s_i) {
    for (int ch = 0; ch < c; ++ch) {
      const double* plane = xt.data() + (static_cast<int64_t>(s_i) * c + ch) * h * w;
      int64_t base = (static_cast<int64_t>(s_i) * c + ch) * h * w;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++out_i) {
          // Padded positions act as -inf: they can never win the max.
          double best = 0.0;
          int64_t best_i = -1;
          for (int ky = 0; ky < kh; ++ky) {
            int iy = oy * sh - ph + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              int ix = ox * sw - pw + kx;
              if (ix < 0 || ix >= w) continue;
              double v = plane[static_cast<int64_t>(iy) * w + ix];
              if (best_i < 0 || v > best) {
                best = v;
                best_i = base + static_cast<int64_t>(iy) * w + ix;
              }
            }
          }
          // p < k guarantees every window overlaps the image.
          node->value[out_i] = best;
          node->argmax[static_cast<size_t>(out_i)] = best_i;
        }
      }
    }
  }
  check_finite_debug(node->value, "max_pool");
  return node;
}

void MaxPoolNode::backward() {
  const Value& x = inputs[0];
  if (!x->requires_grad) return;
  Tensor& gx = x->grad_buf();
  for (int64_t i = 0; i < value.size(); ++i) gx[argmax[static_cast<size_t>(i)]] += grad[i];
}

Value avg_pool(const Value& x, int kh, int kw, int sh, int sw) {
  const Tensor& xt = x->value;
  require(xt.rank() == 4, ErrorKind::shape_mismatch,
          cat("avg_pool: expected rank-4 input, got ", xt.shape_str()));
  int n = xt.n(), c = xt.c(), h = xt.h(), w = xt.w();
  int oh = pool_out_extent(h, kh, sh, 0, "avg_pool");
  int ow = pool_out_extent(w, kw, sw, 0, "avg_pool");

  auto node = std::make_shared<AvgPoolNode>();
  node->kh = kh;
  node->kw = kw;
  node->sh = sh;
  node->sw = sw;
  node->inputs = {x};
  node->requires_grad = x->requires_grad;
  node->value = Tensor({n, c, oh, ow});

  double inv = 1.0 / (static_cast<double>(kh) * kw);
  int64_t out_i = 0;
  for (int s_i = 0; s_i < n; ++s_i) {
    for (int ch = 0; ch < c; ++ch) {
      const double* plane = xt.data() + (static_cast<int64_t>(s_i) * c + ch) * h * w;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++out_i) {
          double acc = 0.0;
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx)
              acc += plane[static_cast<int64_t>(oy * sh + ky) * w + (ox * sw + kx)];
          node->value[out_i] = acc * inv;
        }
      }
    }
  }
  check_finite_debug(node->value, "avg_pool");
  return node;
}

void AvgPoolNode::backward() {
  const Value& x = inputs[0];
  if (!x->requires_grad) return;
  const Tensor& xt = x->value;
  int n = xt.n(), c = xt.c(), h = xt.h(), w = xt.w();
  int oh = value.h(), ow = value.w();
  double inv = 1.0 / (static_cast<double>(kh) * kw);
  int64_t out_i = 0;
  for (int s_i = 0; s_i < n; ++s_i) {
    for (int ch = 0; ch < c; ++ch) {
      double* gplane = x->grad_buf().data() + (static_cast<int64_t>(s_i) * c + ch) * h * w;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++out_i) {
          double g = grad[out_i] * inv;
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx)
              gplane[static_cast<int64_t>(oy * sh + ky) * w + (ox * sw + kx)] += g;
        }
      }
    }
  }
}

Value bilinear_upsample(const Value& x, int out_h, int out_w) {
  const Tensor& xt = x->value;
  require(xt.rank() == 4, ErrorKind::shape_mismatch,
          cat("bilinear_upsample: expected rank-4 input, got ", xt.shape_str()));
  int n = xt.n(), c = xt.c(), h = xt.h(), w = xt.w();
  require(out_h >= h && out_w >= w, ErrorKind::shape_mismatch,
          cat("bilinear_upsample: target ", out_h, "x", out_w, " must not shrink input ", h, "x",
              w));

  auto node = std::make_shared<BilinearUpsampleNode>();
  node->inputs = {x};
  node->requires_grad = x->requires_grad;
  node->value = Tensor({n, c, out_h, out_w});

  for (int s_i = 0; s_i < n; ++s_i) {
    for (int ch = 0; ch < c; ++ch) {
      const double* src = xt.data() + (static_cast<int64_t>(s_i) * c + ch) * h * w;
      double* dst = node->value.data() + (static_cast<int64_t>(s_i) * c + ch) * out_h * out_w;
      for (int oy = 0; oy < out_h; ++oy) {
        double sy = src_coord(oy, out_h, h);
        int y0 = static_cast<int>(sy);
        int y1 = std::min(y0 + 1, h - 1);
        double fy = sy - y0;
        for (int ox = 0; ox < out_w; ++ox) {
          double sx = src_coord(ox, out_w, w);
          int x0 = static_cast<int>(sx);
          int x1 = std::min(x0 + 1, w - 1);
          double fx = sx - x0;
          dst[static_cast<int64_t>(oy) * out_w + ox] =
              (1.0 - fy) * ((1.0 - fx) * src[static_cast<int64_t>(y0) * w + x0] +
                            fx * src[static_cast<int64_t>(y0) * w + x1]) +
              fy * ((1.0 - fx) * src[static_cast<int64_t>(y1) * w + x0] +
                    fx * src[static_cast<int64_t>(y1) * w + x1]);
        }
      }
    }
  }
  check_finite_debug(node->value, "bilinear_upsample");
  return node;
}

void BilinearUpsampleNode::backward() {
  const Value& x = inputs[0];
  if (!x->requires_grad) return;
  const Tensor& xt = x->value;
  int n = xt.n(), c = xt.c(), h = xt.h(), w = xt.w();
  int out_h = value.h(), out_w = value.w();
  for (int s_i = 0; s_i < n; ++s_i) {
    for (int ch = 0; ch < c; ++ch) {
      double* gsrc = x->grad_buf().data() + (static_cast<int64_t>(s_i) * c + ch) * h * w;
      const double* gdst = grad.data() + (static_cast<int64_t>(s_i) * c + ch) * out_h * out_w;
      for (int oy = 0; oy < out_h; ++oy) {
        double sy = src_coord(oy, out_h, h);
        int y0 = static_cast<int>(sy);
        int y1 = std::min(y0 + 1, h - 1);
        double fy = sy - y0;
        for (int ox = 0; ox < out_w; ++ox) {
          double sx = src_coord(ox, out_w, w);
          int x0 = static_cast<int>(sx);
          int x1 = std::min(x0 + 1, w - 1);
          double fx = sx - x0;
          double g = gdst[static_cast<int64_t>(oy) * out_w + ox];
          gsrc[static_cast<int64_t>(y0) * w + x0] += (1.0 - fy) * (1.0 - fx) * g;
          gsrc[static_cast<int64_t>(y0) * w + x1] += (1.0 - fy) * fx * g;
          gsrc[static_cast<int64_t>(y1) * w + x0] += fy * (1.0 - fx) * g;
          gsrc[static_cast<int64_t>(y1) * w + x1] += fy * fx * g;
        }
      }
    }
  }
}

}  // namespace fdnet
