#include "loss/boundary.hpp"

#include <algorithm>
#include <cmath>

#include "core/ops.hpp"

namespace fdnet::loss {

namespace {
using detail::require;
constexpr double kLogEps = 1e-12;
constexpr int32_t kFarAway = 1 << 29;
}  // namespace

void LossConfig::validate() const {
  auto check = [](bool ok, const char* field, const std::string& msg) {
    if (!ok) fail(ErrorKind::invalid_config, cat("loss.", field, ": ", msg));
  };
  check(!alpha.empty(), "alpha", "must list at least one weight");
  for (double a : alpha) check(a > 0.0, "alpha", "weights must be positive");
  check(alpha.size() == kernels.size() + 1, "alpha",
        cat("must have exactly one more entry than kernels (", kernels.size(), " kernels, ",
            alpha.size(), " weights)"));
  for (size_t i = 0; i < kernels.size(); ++i) {
    check(kernels[i] >= 1, "kernels", "kernel radii must be at least 1");
    if (i > 0) check(kernels[i] > kernels[i - 1], "kernels", "radii must be strictly increasing");
  }
  check(weight_mode == "poly" || weight_mode == "exp", "weight_mode", "must be poly or exp");
  check(lambda >= 0.0, "lambda", "must be non-negative");
  check(class_count >= 2, "class_count", "must be at least 2");
}

cfg::Json LossConfig::to_json() const {
  cfg::Json j;
  j["alpha"] = alpha;
  j["kernels"] = kernels;
  j["weight_mode"] = weight_mode;
  j["lambda"] = lambda;
  j["class_count"] = class_count;
  return j;
}

LossConfig LossConfig::from_json(const cfg::Json& j, const std::string& path) {
  cfg::reject_unknown(j, {"alpha", "kernels", "weight_mode", "lambda", "class_count"}, path);
  LossConfig c;
  c.alpha = cfg::get_double_list_or(j, "alpha", path, c.alpha);
  c.kernels = cfg::get_int_list_or(j, "kernels", path, c.kernels);
  c.weight_mode = cfg::get_string_or(j, "weight_mode", path, c.weight_mode);
  c.lambda = cfg::get_double_or(j, "lambda", path, c.lambda);
  c.class_count = cfg::get_int_or(j, "class_count", path, c.class_count);
  return c;
}

Mask extract_boundary(const Raster& labels, int ignore_label) {
  Mask out(labels.h, labels.w);
  for (int y = 0; y < labels.h; ++y) {
    for (int x = 0; x < labels.w; ++x) {
      int32_t c = labels.at(y, x);
      if (c == ignore_label) continue;
      auto differs = [&](int ny, int nx) {
        if (ny < 0 || ny >= labels.h || nx < 0 || nx >= labels.w) return false;
        int32_t n = labels.at(ny, nx);
        return n != ignore_label && n != c;
      };
      if (differs(y - 1, x) || differs(y + 1, x) || differs(y, x - 1) || differs(y, x + 1))
        out.set(y, x, true);
    }
  }
  return out;
}

Mask dilate(const Mask& m, int k) {
  require(k >= 1, ErrorKind::invalid_config, cat("dilate: kernel radius must be >= 1, got ", k));
  // Separable: horizontal sweep then vertical sweep of radius k.
  Mask horiz(m.h, m.w);
  for (int y = 0; y < m.h; ++y) {
    for (int x = 0; x < m.w; ++x) {
      bool any = false;
      for (int dx = std::max(0, x - k), hi = std::min(m.w - 1, x + k); dx <= hi && !any; ++dx)
        any = m.at(y, dx);
      horiz.set(y, x, any);
    }
  }
  Mask out(m.h, m.w);
  for (int y = 0; y < m.h; ++y) {
    for (int x = 0; x < m.w; ++x) {
      bool any = false;
      for (int dy = std::max(0, y - k), hi = std::min(m.h - 1, y + k); dy <= hi && !any; ++dy)
        any = horiz.at(dy, x);
      out.set(y, x, any);
    }
  }
  return out;
}

Raster chebyshev_distance(const Mask& m) {
  Raster d(m.h, m.w, kFarAway);
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x)
      if (m.at(y, x)) d.at(y, x) = 0;

  auto relax = [&](int y, int x, int ny, int nx) {
    if (ny < 0 || ny >= m.h || nx < 0 || nx >= m.w) return;
    d.at(y, x) = std::min(d.at(y, x), d.at(ny, nx) + 1);
  };
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      relax(y, x, y - 1, x - 1);
      relax(y, x, y - 1, x);
      relax(y, x, y - 1, x + 1);
      relax(y, x, y, x - 1);
    }
  for (int y = m.h - 1; y >= 0; --y)
    for (int x = m.w - 1; x >= 0; --x) {
      relax(y, x, y + 1, x - 1);
      relax(y, x, y + 1, x);
      relax(y, x, y + 1, x + 1);
      relax(y, x, y, x + 1);
    }
  return d;
}

BandMap band_partition(const Raster& labels, const LossConfig& cfg, int ignore_label) {
  cfg.validate();
  BandMap out;
  out.band_count = cfg.band_count();
  out.bands = Raster(labels.h, labels.w, 0);
  out.ignore = Mask(labels.h, labels.w);

  Raster dist = chebyshev_distance(extract_boundary(labels, ignore_label));
  int k_bands = cfg.band_count();
  for (int y = 0; y < labels.h; ++y) {
    for (int x = 0; x < labels.w; ++x) {
      if (labels.at(y, x) == ignore_label) {
        out.ignore.set(y, x, true);
        continue;  // band stays 0
      }
      int32_t dv = dist.at(y, x);
      int band = k_bands;  // remainder band
      for (size_t j = 0; j < cfg.kernels.size(); ++j) {
        if (dv <= cfg.kernels[j]) {
          band = static_cast<int>(j) + 1;
          break;
        }
      }
      out.bands.at(y, x) = band;
    }
  }
  return out;
}

double attention_weight(double p, const std::string& mode, double lambda) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::invalid_config,
          cat("attention_weight: probability out of range: ", p));
  require(lambda >= 0.0, ErrorKind::invalid_config, "attention_weight: lambda must be >= 0");
  if (mode == "poly") return lambda == 0.0 ? 1.0 : std::pow(std::max(1.0 - p, 0.0), lambda);
  if (mode == "exp") return std::exp(-lambda * (1.0 - p));
  fail(ErrorKind::invalid_config, cat("attention_weight: unknown mode '", mode, "'"));
}

namespace {

struct BoundaryLossNode final : Node {
  // Per counted pixel: flat index of its ground-truth channel in the
  // probability tensor and the precomputed d(loss)/d(p) coefficient.
  std::vector<int64_t> indices;
  std::vector<double> coefs;
  const char* op_name() const override { return "boundary_aware_loss"; }
  void backward() override {
    Tensor& gp = inputs[0]->grad_buf();
    double g = grad[0];
    for (size_t i = 0; i < indices.size(); ++i) gp[indices[i]] += g * coefs[i];
  }
};

}  // namespace

Value boundary_aware_loss(const Value& probs, const std::vector<Raster>& gt,
                          const std::vector<BandMap>& bands, const LossConfig& cfg,
                          int ignore_label, LossDiagnostics* diag) {
  cfg.validate();
  const Tensor& p = probs->value;
  require(p.rank() == 4, ErrorKind::shape_mismatch,
          cat("boundary_aware_loss: expected rank-4 probabilities, got ", p.shape_str()));
  require(p.c() == cfg.class_count, ErrorKind::shape_mismatch,
          cat("boundary_aware_loss: probabilities have ", p.c(), " channels, config says ",
              cfg.class_count));
  require(gt.size() == static_cast<size_t>(p.n()) && bands.size() == gt.size(),
          ErrorKind::shape_mismatch,
          cat("boundary_aware_loss: batch ", p.n(), " vs ", gt.size(), " labels, ", bands.size(),
              " band maps"));

  auto node = std::make_shared<BoundaryLossNode>();
  node->inputs = {probs};
  node->requires_grad = probs->requires_grad;

  bool poly = cfg.weight_mode == "poly";
  double lambda = cfg.lambda;

  // First pass: count pixels that participate (global 1/N' normalization).
  int64_t counted = 0;
  for (int s = 0; s < p.n(); ++s) {
    require(gt[static_cast<size_t>(s)].h == p.h() && gt[static_cast<size_t>(s)].w == p.w(),
            ErrorKind::shape_mismatch,
            cat("boundary_aware_loss: label raster ", gt[static_cast<size_t>(s)].h, "x",
                gt[static_cast<size_t>(s)].w, " does not match probabilities ", p.h(), "x", p.w()));
    require(bands[static_cast<size_t>(s)].bands.same_shape(gt[static_cast<size_t>(s)]),
            ErrorKind::shape_mismatch, "boundary_aware_loss: band map does not match labels");
    for (int32_t c : gt[static_cast<size_t>(s)].v)
      if (c != ignore_label) ++counted;
  }
  require(counted > 0, ErrorKind::runtime, "boundary_aware_loss: every pixel is ignored");
  double inv_n = 1.0 / static_cast<double>(counted);

  int64_t plane = static_cast<int64_t>(p.h()) * p.w();
  double total = 0.0;
  for (int s = 0; s < p.n(); ++s) {
    const Raster& labels = gt[static_cast<size_t>(s)];
    const BandMap& bm = bands[static_cast<size_t>(s)];
    for (int y = 0; y < p.h(); ++y) {
      for (int x = 0; x < p.w(); ++x) {
        int32_t c = labels.at(y, x);
        if (c == ignore_label) continue;
        require(c >= 0 && c < cfg.class_count, ErrorKind::runtime,
                cat("boundary_aware_loss: label ", c, " at (", y, ",", x, ") of sample ", s,
                    " is outside [0, ", cfg.class_count, ")"));
        int band = bm.bands.at(y, x);
        require(band >= 1 && band <= cfg.band_count(), ErrorKind::runtime,
                cat("boundary_aware_loss: band ", band, " out of range at (", y, ",", x, ")"));
        double a = cfg.alpha[static_cast<size_t>(band - 1)];

        int64_t idx = ((static_cast<int64_t>(s) * p.c() + c) * p.h() + y) * p.w() + x;
        double pv = p[idx];
        bool clamped = pv < kLogEps;
        if (clamped && diag) ++diag->clamped_pixels;
        double lp = std::log(clamped ? kLogEps : pv);
        double dlog = clamped ? 0.0 : 1.0 / pv;

        double wt, dwt;
        if (poly) {
          if (lambda == 0.0) {
            wt = 1.0;
            dwt = 0.0;
          } else {
            double q = std::max(1.0 - pv, kLogEps);  // keeps w' finite as p -> 1
            wt = std::pow(q, lambda);
            dwt = -lambda * std::pow(q, lambda - 1.0);
          }
        } else {
          wt = std::exp(-lambda * (1.0 - pv));
          dwt = lambda * wt;
        }

        total += -a * wt * lp;
        if (node->requires_grad) {
          node->indices.push_back(idx);
          node->coefs.push_back(-a * inv_n * (dwt * lp + wt * dlog));
        }
      }
    }
  }
  node->value = Tensor::scalar(total * inv_n);
  check_finite_debug(node->value, "boundary_aware_loss");
  return node;
}

Value deep_supervision_loss(const std::vector<Value>& stage_logits, const std::vector<Raster>& gt,
                            const std::vector<BandMap>& bands, const LossConfig& cfg,
                            int ignore_label, LossDiagnostics* diag) {
  require(!stage_logits.empty(), ErrorKind::shape_mismatch,
          "deep_supervision_loss: no stage outputs");
  Value total;
  for (const Value& logits : stage_logits) {
    require(!gt.empty() && logits->value.h() == gt[0].h && logits->value.w() == gt[0].w,
            ErrorKind::shape_mismatch,
            cat("deep_supervision_loss: stage output ", logits->value.shape_str(),
                " does not match label raster ", gt.empty() ? 0 : gt[0].h, "x",
                gt.empty() ? 0 : gt[0].w));
    Value l = boundary_aware_loss(softmax_channels(logits), gt, bands, cfg, ignore_label, diag);
    total = total ? add(total, l) : l;
  }
  return total;
}

}  // namespace fdnet::loss
