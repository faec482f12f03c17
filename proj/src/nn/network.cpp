#include "nn/network.hpp"

#include <algorithm>
#include <fstream>

namespace fdnet::nn {

namespace {

using detail::require;

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_exact(int v) {
  int e = 0;
  while ((1 << e) < v) ++e;
  return e;
}

}  // namespace

void NetworkSpec::validate() const {
  auto check = [](bool ok, const char* field, const std::string& msg) {
    if (!ok) fail(ErrorKind::invalid_config, cat("network.", field, ": ", msg));
  };
  check(class_count >= 2, "class_count", "must be at least 2");
  check(in_channels >= 1, "in_channels", "must be positive");
  check(encoder_depths.size() == 4, "encoder_depths", "must list exactly 4 block depths");
  for (int d : encoder_depths) check(d >= 1, "encoder_depths", "every depth must be at least 1");
  check(growth >= 1, "growth", "must be positive");
  check(init_channels >= 2, "init_channels", "must be at least 2");
  check(stride == 16 || stride == 32, "stride", "must be 16 or 32");
  check(block4_dilation >= 1, "block4_dilation", "must be positive");
  if (stride == 16)
    check(block4_dilation >= 2, "block4_dilation", "must be at least 2 in stride-16 mode");
  check(wiring == "none" || wiring == "skip" || wiring == "dense", "wiring",
        "must be one of none, skip, dense");
  check(after_agg_widths.size() == 2, "after_agg_widths", "must list exactly 2 widths");
  check(after_block_widths.size() == 2, "after_block_widths", "must list exactly 2 widths");
  check(reuse_widths.size() == 3, "reuse_widths", "must list exactly 3 widths");
  check(decoder_depths.size() == 2, "decoder_depths", "must list exactly 2 depths");
  for (int v : after_agg_widths) check(v >= 1, "after_agg_widths", "widths must be positive");
  for (int v : after_block_widths) check(v >= 1, "after_block_widths", "widths must be positive");
  for (int v : reuse_widths) check(v >= 1, "reuse_widths", "widths must be positive");
  for (int v : decoder_depths) check(v >= 1, "decoder_depths", "depths must be at least 1");
  check(stage_scales.size() == 3, "stage_scales", "must list exactly 3 scale denominators");
  for (int s : stage_scales)
    check(is_pow2(s) && s >= 2 && s <= 64, "stage_scales",
          "each denominator must be a power of two in [2, 64]");
}

cfg::Json NetworkSpec::to_json() const {
  cfg::Json j;
  j["class_count"] = class_count;
  j["in_channels"] = in_channels;
  j["encoder_depths"] = encoder_depths;
  j["growth"] = growth;
  j["init_channels"] = init_channels;
  j["stride"] = stride;
  j["block4_dilation"] = block4_dilation;
  j["wiring"] = wiring;
  j["after_agg_widths"] = after_agg_widths;
  j["after_block_widths"] = after_block_widths;
  j["reuse_widths"] = reuse_widths;
  j["decoder_depths"] = decoder_depths;
  j["stage_scales"] = stage_scales;
  j["deep_supervision"] = deep_supervision;
  return j;
}

NetworkSpec NetworkSpec::from_json(const cfg::Json& j, const std::string& path) {
  cfg::reject_unknown(j,
                      {"class_count", "in_channels", "encoder_depths", "growth", "init_channels",
                       "stride", "block4_dilation", "wiring", "after_agg_widths",
                       "after_block_widths", "reuse_widths", "decoder_depths", "stage_scales",
                       "deep_supervision"},
                      path);
  NetworkSpec s;
  s.class_count = cfg::get_int_or(j, "class_count", path, s.class_count);
  s.in_channels = cfg::get_int_or(j, "in_channels", path, s.in_channels);
  s.encoder_depths = cfg::get_int_list_or(j, "encoder_depths", path, s.encoder_depths);
  s.growth = cfg::get_int_or(j, "growth", path, s.growth);
  s.init_channels = cfg::get_int_or(j, "init_channels", path, s.init_channels);
  s.stride = cfg::get_int_or(j, "stride", path, s.stride);
  s.block4_dilation = cfg::get_int_or(j, "block4_dilation", path, s.block4_dilation);
  s.wiring = cfg::get_string_or(j, "wiring", path, s.wiring);
  s.after_agg_widths = cfg::get_int_list_or(j, "after_agg_widths", path, s.after_agg_widths);
  s.after_block_widths = cfg::get_int_list_or(j, "after_block_widths", path, s.after_block_widths);
  s.reuse_widths = cfg::get_int_list_or(j, "reuse_widths", path, s.reuse_widths);
  s.decoder_depths = cfg::get_int_list_or(j, "decoder_depths", path, s.decoder_depths);
  s.stage_scales = cfg::get_int_list_or(j, "stage_scales", path, s.stage_scales);
  s.deep_supervision = cfg::get_bool_or(j, "deep_supervision", path, s.deep_supervision);
  return s;
}

int Network::granularity() const {
  int g = spec_.stride;
  for (int s : spec_.stage_scales) g = std::max(g, s);
  return g;
}

std::unique_ptr<Network> Network::build(const NetworkSpec& spec, uint64_t seed) {
  spec.validate();
  auto net = std::unique_ptr<Network>(new Network());
  net->spec_ = spec;
  net->construct(seed);
  return net;
}

void Network::construct(uint64_t seed) {
  Rng rng(seed);
  const NetworkSpec& s = spec_;

  // ---- Encoder -------------------------------------------------------------
  stem_ = Stem(reg_, "stem", s.in_channels, s.init_channels, rng);
  int ch = s.init_channels;
  std::vector<int> block_ch(4), block_scale(4);
  for (int b = 0; b < 4; ++b) {
    int dil = (b == 3 && s.stride == 16) ? s.block4_dilation : 1;
    enc_blocks_.emplace_back(reg_, cat("enc.block", b + 1), ch, s.encoder_depths[b], s.growth, dil,
                             rng);
    ch = enc_blocks_.back().out_channels();
    block_ch[b] = ch;
    block_scale[b] = (b < 3) ? (4 << b) : s.stride;
    if (b < 3) {
      bool pool = (b < 2) || (s.stride == 32);  // pooling before block 4 only in stride-32 mode
      transitions_.emplace_back(reg_, cat("enc.trans", b + 1), ch, 0.5, pool, rng);
      ch = transitions_.back().out_ch;
    }
  }

  // Forward-time feature taps:
  //   0..3  raw B1..B4 outputs
  //   4     compressed block-5 output (direct input to stage 2)
  //   5     raw block-5 output (reuse source for stage 3)
  //   6     compressed block-6 output (direct input to stage 3)
  struct TapInfo {
    std::string id;
    int channels;
    int scale;
  };
  std::vector<TapInfo> taps = {
      {"B1", block_ch[0], block_scale[0]}, {"B2", block_ch[1], block_scale[1]},
      {"B3", block_ch[2], block_scale[2]}, {"B4", block_ch[3], block_scale[3]},
      {"D5", 0, 0},                        {"D5", 0, 0},
      {"D6", 0, 0}};

  // ---- Decoder: three aggregation stages ------------------------------------
  for (int i = 0; i < 3; ++i) {
    AggStage stage;
    stage.scale = s.stage_scales[static_cast<size_t>(i)];
    int stage_no = i + 1;
    int direct_tap = (i == 0) ? 3 : (i == 1 ? 4 : 6);

    // Reuse sources in block order, then the direct source last.
    std::vector<int> reuse_taps;
    if (s.wiring == "dense") {
      if (i == 0) reuse_taps = {0, 1, 2};
      if (i == 1) reuse_taps = {0, 1, 2, 3};
      if (i == 2) reuse_taps = {0, 1, 2, 3, 5};
    } else if (s.wiring == "skip") {
      // U-Net style: the lowest-numbered encoder block at the stage's scale.
      int found = -1;
      for (int b = 0; b < 4; ++b) {
        if (b == direct_tap) continue;
        if (block_scale[b] == stage.scale) {
          found = b;
          break;
        }
      }
      require(found >= 0, ErrorKind::invalid_config,
              cat("network.wiring: skip mode needs an encoder block at scale 1/", stage.scale,
                  " for stage ", stage_no));
      reuse_taps = {found};
    }

    int reuse_w = s.reuse_widths[static_cast<size_t>(i)];
    int out_ch = 0;
    for (int tap : reuse_taps) {
      AggSource src;
      src.id = taps[static_cast<size_t>(tap)].id;
      src.tap = tap;
      src.direct = false;
      src.compressed = true;
      std::string base = cat("dec.stage", stage_no, ".src_", src.id);
      src.compress = BnReluConv(reg_, base + ".compress", taps[static_cast<size_t>(tap)].channels,
                                reuse_w, 1, 1, 0, 1, rng);
      int k = log2_exact(stage.scale) - log2_exact(taps[static_cast<size_t>(tap)].scale);
      if (k != 0) src.resize = Resize(reg_, base + ".resize", reuse_w, reuse_w, k, rng);
      src.transform = k > 0 ? "downsample" : (k < 0 ? "upsample" : "identity");
      src.width = reuse_w;
      out_ch += reuse_w;
      stage.sources.push_back(std::move(src));
    }
    {
      AggSource src;
      src.id = taps[static_cast<size_t>(direct_tap)].id;
      src.tap = direct_tap;
      src.direct = true;
      src.transform = "direct";
      src.width = taps[static_cast<size_t>(direct_tap)].channels;
      int k = log2_exact(stage.scale) - log2_exact(taps[static_cast<size_t>(direct_tap)].scale);
      if (k != 0)
        src.resize = Resize(reg_, cat("dec.stage", stage_no, ".src_", src.id, ".resize"),
                            src.width, src.width, k, rng);
      out_ch += src.width;
      stage.sources.push_back(std::move(src));
    }
    stage.out_channels = out_ch;
    stage.head = Head(reg_, cat("dec.stage", stage_no, ".head"), out_ch, s.class_count, rng);

    for (const AggSource& src : stage.sources)
      edges_.push_back({src.id, stage_no, src.transform, src.width});

    stages_.push_back(std::move(stage));

    // Stages 1 and 2 continue into a decoder dense block; stage 3 ends the net.
    if (i < 2) {
      int agg_w = s.after_agg_widths[static_cast<size_t>(i)];
      after_agg_.emplace_back(reg_, cat("dec.stage", stage_no, ".agg_compress"), out_ch, agg_w, 1,
                              1, 0, 1, rng);
      dec_blocks_.emplace_back(reg_, cat("dec.block", 5 + i), agg_w,
                               s.decoder_depths[static_cast<size_t>(i)], s.growth, 1, rng);
      int raw_ch = dec_blocks_.back().out_channels();
      int block_w = s.after_block_widths[static_cast<size_t>(i)];
      after_block_.emplace_back(reg_, cat("dec.block", 5 + i, ".compress"), raw_ch, block_w, 1, 1,
                                0, 1, rng);
      if (i == 0) {
        taps[4] = {"D5", block_w, stages_[0].scale};
        taps[5] = {"D5", raw_ch, stages_[0].scale};
      } else {
        taps[6] = {"D6", block_w, stages_[1].scale};
      }
    }
  }
}

ForwardResult Network::forward(const Value& input, bool training, bool with_aux) const {
  const Tensor& in = input->value;
  require(in.rank() == 4, ErrorKind::shape_mismatch,
          cat("network input must be rank-4 NCHW, got ", in.shape_str()));
  require(in.c() == spec_.in_channels, ErrorKind::shape_mismatch,
          cat("network expects ", spec_.in_channels, " input channels, got ", in.c()));
  int g = granularity();
  require(in.h() > 0 && in.w() > 0 && in.h() % g == 0 && in.w() % g == 0,
          ErrorKind::shape_mismatch,
          cat("network input extent ", in.h(), "x", in.w(), " must be a positive multiple of ", g));

  ForwardResult result;
  auto record = [&](const std::string& name, const Value& v) {
    result.tap_shapes.emplace_back(name, v->value.shape());
  };

  // Encoder.
  std::vector<Value> taps(7);
  Value x = stem_.forward(input, training);
  for (int b = 0; b < 4; ++b) {
    x = enc_blocks_[static_cast<size_t>(b)].forward(x, training);
    taps[static_cast<size_t>(b)] = x;
    record(cat("B", b + 1), x);
    if (b < 3) x = transitions_[static_cast<size_t>(b)].forward(x, training);
  }

  // Decoder.
  for (size_t i = 0; i < stages_.size(); ++i) {
    const AggStage& stage = stages_[i];
    std::vector<Value> gathered;
    gathered.reserve(stage.sources.size());
    for (const AggSource& src : stage.sources) {
      Value v = taps[static_cast<size_t>(src.tap)];
      if (src.compressed) v = src.compress.forward(v, training);
      if (src.resize.log2_factor != 0) v = src.resize.forward(v, training);
      gathered.push_back(v);
    }
    Value agg = concat_channels(gathered);
    record(cat("agg", i + 1), agg);

    int stage_no = static_cast<int>(i) + 1;
    if (stage_no == 3 || with_aux) {
      result.stages.push_back(stage_no);
      result.logits.push_back(stage.head.forward(agg, in.h(), in.w()));
    }

    if (i < 2) {
      Value y = after_agg_[i].forward(agg, training);
      y = dec_blocks_[i].forward(y, training);
      record(cat("D", 5 + i), y);
      if (i == 0) taps[5] = y;  // raw block-5 output, reused by stage 3
      y = after_block_[i].forward(y, training);
      taps[i == 0 ? 4 : 6] = y;  // compressed output, the next stage's direct input
    }
  }
  return result;
}

// ---- Checkpoint I/O ---------------------------------------------------------

namespace {
constexpr char kCheckpointMagic[9] = "FDNETCK1";

int64_t tensor_blob_size(const Tensor& t) {
  return 8 + 4 + 4 * static_cast<int64_t>(t.rank()) + 8 * t.size();
}

void put_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) fail(ErrorKind::io, "checkpoint: truncated header length");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void Network::save(const std::string& path) const {
  cfg::Json header;
  header["format"] = "FDNETCK1";
  header["network"] = spec_.to_json();
  cfg::Json tensors = cfg::Json::array();
  int64_t offset = 0;
  for (const auto& p : reg_.all()) {
    tensors.push_back({{"id", p->id}, {"offset", offset}});
    offset += tensor_blob_size(p->value);
  }
  header["tensors"] = std::move(tensors);
  std::string header_text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::io, cat("cannot open checkpoint for writing: ", path));
  os.write(kCheckpointMagic, 8);
  put_u64(os, header_text.size());
  os.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& p : reg_.all()) p->value.write(os);
  os.flush();
  if (!os) fail(ErrorKind::io, cat("failed writing checkpoint: ", path));
}

std::unique_ptr<Network> Network::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, cat("cannot open checkpoint: ", path));
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    fail(ErrorKind::io, cat("not an FDNETCK1 checkpoint: ", path));
  uint64_t header_len = get_u64(is);
  if (header_len == 0 || header_len > (1u << 26))
    fail(ErrorKind::io, cat("checkpoint header length implausible: ", header_len));
  std::string header_text(header_len, '\0');
  is.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!is) fail(ErrorKind::io, "checkpoint: truncated header");

  cfg::Json header = cfg::parse_text(header_text, "checkpoint header");
  cfg::reject_unknown(header, {"format", "network", "tensors"}, "checkpoint");
  if (cfg::get_string(header, "format", "checkpoint") != "FDNETCK1")
    fail(ErrorKind::io, "checkpoint: unsupported format tag");
  NetworkSpec spec = NetworkSpec::from_json(header.at("network"), "checkpoint.network");
  auto net = build(spec, /*seed=*/0);

  const cfg::Json& tensors = header.at("tensors");
  if (!tensors.is_array() || tensors.size() != net->reg_.all().size())
    fail(ErrorKind::io, cat("checkpoint lists ", tensors.size(), " tensors, network has ",
                            net->reg_.all().size()));
  int64_t offset = 0;
  for (size_t i = 0; i < tensors.size(); ++i) {
    const cfg::Json& e = tensors.at(i);
    const ParamPtr& p = net->reg_.all()[i];
    std::string id = cfg::get_string(e, "id", "checkpoint.tensors");
    if (id != p->id)
      fail(ErrorKind::io, cat("checkpoint tensor ", i, " is '", id, "', expected '", p->id, "'"));
    if (!e.contains("offset") || !e.at("offset").is_number_integer() ||
        e.at("offset").get<int64_t>() != offset)
      fail(ErrorKind::io, cat("checkpoint tensor '", id, "' has a bad offset"));
    Tensor t = Tensor::read(is);
    if (!t.same_shape(p->value))
      fail(ErrorKind::io, cat("checkpoint tensor '", id, "' has shape ", t.shape_str(),
                              ", network expects ", p->value.shape_str()));
    p->value = std::move(t);
    offset += tensor_blob_size(p->value);
  }
  return net;
}

}  // namespace fdnet::nn
