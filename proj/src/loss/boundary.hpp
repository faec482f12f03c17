#pragma once

#include <string>
#include <vector>

#include "config/json_util.hpp"
#include "core/graph.hpp"
#include "core/raster.hpp"

namespace fdnet::loss {

struct LossConfig {
  std::vector<double> alpha = {8.0, 6.0, 4.0, 2.0, 1.0};  // per band, last = remainder
  std::vector<int> kernels = {10, 20, 30, 40};            // Chebyshev radii, strictly increasing
  std::string weight_mode = "poly";                       // poly | exp
  double lambda = 0.0;
  int class_count = 21;

  int band_count() const { return static_cast<int>(alpha.size()); }
  void validate() const;
  cfg::Json to_json() const;
  static LossConfig from_json(const cfg::Json& j, const std::string& path);
};

/// Band assignment for one label raster. Band indices are 1-based; ignored
/// pixels carry band 0 and are excluded from the loss.
struct BandMap {
  Raster bands;
  Mask ignore;
  int band_count = 1;
};

/// Pixels whose label differs from any 4-neighbor's non-ignore label;
/// ignore-labeled pixels are never boundary.
Mask extract_boundary(const Raster& labels, int ignore_label);

/// Morphological dilation with a (2k+1) x (2k+1) square structuring element.
Mask dilate(const Mask& m, int k);

/// Exact Chebyshev distance to the nearest set pixel (two-pass 8-neighbor
/// chamfer; exact for this metric). Pixels of an empty mask get a distance
/// larger than any raster extent.
Raster chebyshev_distance(const Mask& m);

BandMap band_partition(const Raster& labels, const LossConfig& cfg, int ignore_label);

/// Eq.-style attention weight; both modes return 1 when lambda = 0.
double attention_weight(double p, const std::string& mode, double lambda);

struct LossDiagnostics {
  int64_t clamped_pixels = 0;  // pixels whose probability hit the log clamp
};

/// Scalar boundary-aware loss over softmax probabilities. `gt` and `bands`
/// carry one entry per batch sample. Differentiable through both the log term
/// and the attention weight.
Value boundary_aware_loss(const Value& probs, const std::vector<Raster>& gt,
                          const std::vector<BandMap>& bands, const LossConfig& cfg,
                          int ignore_label, LossDiagnostics* diag = nullptr);

/// Unweighted sum of per-stage boundary-aware losses; each stage's logits are
/// pushed through a channel softmax first.
Value deep_supervision_loss(const std::vector<Value>& stage_logits, const std::vector<Raster>& gt,
                            const std::vector<BandMap>& bands, const LossConfig& cfg,
                            int ignore_label, LossDiagnostics* diag = nullptr);

}  // namespace fdnet::loss
