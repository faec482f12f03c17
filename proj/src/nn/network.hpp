#pragma once

#include <memory>
#include <string>
#include <vector>

#include "config/json_util.hpp"
#include "nn/layers.hpp"

namespace fdnet::nn {

/// Structural description of an FDNet instance. Defaults give the desk-scale
/// configuration; the published-scale widths are expressible but not default.
struct NetworkSpec {
  int class_count = 21;
  int in_channels = 3;
  std::vector<int> encoder_depths = {2, 4, 8, 6};
  int growth = 8;
  int init_channels = 16;
  int stride = 16;         // 16 | 32
  int block4_dilation = 2; // applies in stride-16 mode only
  std::string wiring = "dense";  // none | skip | dense
  std::vector<int> after_agg_widths = {1024, 768};
  std::vector<int> after_block_widths = {768, 512};
  std::vector<int> reuse_widths = {384, 256, 128};
  std::vector<int> decoder_depths = {2, 2};
  std::vector<int> stage_scales = {8, 4, 4};  // denominators of the 3 aggregation stages
  bool deep_supervision = true;

  void validate() const;
  cfg::Json to_json() const;
  static NetworkSpec from_json(const cfg::Json& j, const std::string& path);
};

/// One aggregation input in the connectivity report.
struct Edge {
  std::string source;     // B1..B4, D5, D6
  int stage = 0;          // 1-based aggregation stage
  std::string transform;  // direct | downsample | upsample | identity
  int width = 0;          // channels this source contributes to the concat
};

struct ForwardResult {
  std::vector<int> stages;    // stage index per logits entry, ascending
  std::vector<Value> logits;  // head outputs, upsampled to input resolution
  /// Named intermediate shapes (B1..B4, D5, D6, agg1..agg3) for diagnostics.
  std::vector<std::pair<std::string, std::vector<int>>> tap_shapes;
};

class Network {
 public:
  static std::unique_ptr<Network> build(const NetworkSpec& spec, uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  ParamRegistry& params() { return reg_; }
  const ParamRegistry& params() const { return reg_; }
  int64_t count_parameters() const { return reg_.count_learnable(); }
  const std::vector<Edge>& connectivity() const { return edges_; }

  /// Input extent must be a positive multiple of this.
  int granularity() const;

  /// Runs the network. Head 3 logits are always produced; heads 1 and 2 are
  /// added when `with_aux` is set (deep supervision).
  ForwardResult forward(const Value& input, bool training, bool with_aux) const;

  void save(const std::string& path) const;
  static std::unique_ptr<Network> load(const std::string& path);

 private:
  Network() = default;

  struct AggSource {
    std::string id;      // B1..B4, D5, D6
    int tap = 0;         // index into the forward-time feature list
    bool direct = false;
    bool compressed = false;
    BnReluConv compress;
    Resize resize;
    std::string transform;
    int width = 0;
  };
  struct AggStage {
    int scale = 1;
    std::vector<AggSource> sources;
    int out_channels = 0;
    Head head;
  };

  NetworkSpec spec_;
  ParamRegistry reg_;
  std::vector<Edge> edges_;

  Stem stem_;
  std::vector<DenseBlock> enc_blocks_;
  std::vector<Transition> transitions_;
  std::vector<AggStage> stages_;
  std::vector<BnReluConv> after_agg_;
  std::vector<DenseBlock> dec_blocks_;
  std::vector<BnReluConv> after_block_;

  void construct(uint64_t seed);
};

}  // namespace fdnet::nn
