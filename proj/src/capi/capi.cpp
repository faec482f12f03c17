#include "fdnet/fdnet.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <string>

#include "config/run_config.hpp"
#include "data/augment.hpp"
#include "data/dataset.hpp"
#include "data/netpbm.hpp"
#include "loss/boundary.hpp"
#include "nn/network.hpp"
#include "train/gradcheck.hpp"
#include "train/predict.hpp"
#include "train/trainer.hpp"

struct fdnet_network {
  std::unique_ptr<fdnet::nn::Network> impl;
};

struct fdnet_dataset {
  fdnet::data::Dataset impl;
};

namespace {

using namespace fdnet;

thread_local std::string g_last_error;

fdnet_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_config:
      return FDNET_ERR_INVALID_CONFIG;
    case ErrorKind::io:
      return FDNET_ERR_IO;
    case ErrorKind::shape_mismatch:
      return FDNET_ERR_SHAPE;
    case ErrorKind::runtime:
      return FDNET_ERR_RUNTIME;
  }
  return FDNET_ERR_RUNTIME;
}

template <typename F>
fdnet_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return FDNET_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FDNET_ERR_RUNTIME;
  }
}

void require_arg(const void* p, const char* name) {
  detail::require(p != nullptr, ErrorKind::invalid_config, cat(name, ": null argument"));
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  detail::require(out != nullptr, ErrorKind::runtime, "out of memory");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

cfg::Json parse_options(const char* options_json, const char* what) {
  if (options_json == nullptr || *options_json == '\0') return cfg::Json::object();
  return cfg::parse_text(options_json, what);
}

struct PredictOptions {
  std::vector<double> scales = {1.0};
  bool flip = false;
  std::vector<int> trimap_widths;
  std::vector<double> means;  // empty = derive from the image
};

PredictOptions parse_predict_options(const char* options_json, const char* what) {
  cfg::Json j = parse_options(options_json, what);
  cfg::require_object(j, what);
  cfg::reject_unknown(j, {"scales", "flip", "trimap_widths", "means"}, what);
  PredictOptions o;
  o.scales = cfg::get_double_list_or(j, "scales", what, o.scales);
  o.flip = cfg::get_bool_or(j, "flip", what, false);
  o.trimap_widths = cfg::get_int_list_or(j, "trimap_widths", what, {});
  o.means = cfg::get_double_list_or(j, "means", what, {});
  detail::require(o.means.empty() || o.means.size() == 3, ErrorKind::invalid_config,
                  cfg::join(what, "means") + ": need exactly 3 values");
  return o;
}

std::string connectivity_text(const nn::Network& net) {
  const auto& edges = net.connectivity();
  std::string out;
  for (int stage = 1; stage <= 3; ++stage) {
    out += cat("stage ", stage, ":");
    for (const nn::Edge& e : edges)
      if (e.stage == stage) out += cat(" ", e.source, ":", e.transform, "(", e.width, ")");
    out += "\n";
  }
  out += cat("edges: ", edges.size(), "\n");
  return out;
}

}  // namespace

extern "C" {

const char* fdnet_last_error(void) { return g_last_error.c_str(); }

void fdnet_string_free(char* s) { std::free(s); }

fdnet_status fdnet_network_create(const char* network_spec_json, uint64_t seed,
                                  fdnet_network** out) {
  return guarded([&] {
    require_arg(network_spec_json, "network_spec_json");
    require_arg(out, "out");
    nn::NetworkSpec spec =
        nn::NetworkSpec::from_json(cfg::parse_text(network_spec_json, "network"), "network");
    spec.validate();
    *out = new fdnet_network{nn::Network::build(spec, seed)};
  });
}

fdnet_status fdnet_network_load(const char* checkpoint_path, fdnet_network** out) {
  return guarded([&] {
    require_arg(checkpoint_path, "checkpoint_path");
    require_arg(out, "out");
    *out = new fdnet_network{nn::Network::load(checkpoint_path)};
  });
}

fdnet_status fdnet_network_save(const fdnet_network* net, const char* checkpoint_path) {
  return guarded([&] {
    require_arg(net, "net");
    require_arg(checkpoint_path, "checkpoint_path");
    net->impl->save(checkpoint_path);
  });
}

void fdnet_network_free(fdnet_network* net) { delete net; }

fdnet_status fdnet_network_param_count(const fdnet_network* net, uint64_t* out) {
  return guarded([&] {
    require_arg(net, "net");
    require_arg(out, "out");
    *out = static_cast<uint64_t>(net->impl->count_parameters());
  });
}

fdnet_status fdnet_network_connectivity(const fdnet_network* net, char** out_text) {
  return guarded([&] {
    require_arg(net, "net");
    require_arg(out_text, "out_text");
    *out_text = dup_string(connectivity_text(*net->impl));
  });
}

fdnet_status fdnet_dataset_generate(const char* synthetic_spec_json, const char* out_dir) {
  return guarded([&] {
    require_arg(synthetic_spec_json, "synthetic_spec_json");
    require_arg(out_dir, "out_dir");
    data::SyntheticSpec spec = data::SyntheticSpec::from_json(
        cfg::parse_text(synthetic_spec_json, "synthetic"), "synthetic");
    data::generate_dataset(spec, out_dir);
  });
}

fdnet_status fdnet_dataset_open(const char* dir, fdnet_dataset** out) {
  return guarded([&] {
    require_arg(dir, "dir");
    require_arg(out, "out");
    *out = new fdnet_dataset{data::Dataset::open(dir)};
  });
}

void fdnet_dataset_free(fdnet_dataset* ds) { delete ds; }

fdnet_status fdnet_dataset_size(const fdnet_dataset* ds, int64_t* out) {
  return guarded([&] {
    require_arg(ds, "ds");
    require_arg(out, "out");
    *out = ds->impl.size();
  });
}

fdnet_status fdnet_train(const char* run_config_json, const char* out_dir,
                         char** out_summary_json) {
  return guarded([&] {
    require_arg(run_config_json, "run_config_json");
    require_arg(out_dir, "out_dir");
    RunConfig rc = RunConfig::from_text(run_config_json, "config");
    detail::require(!rc.data_dir.empty(), ErrorKind::invalid_config,
                    "data.dir: required for training");
    data::Dataset ds = data::Dataset::open(rc.data_dir);
    auto net = nn::Network::build(rc.network, rc.train.seed);
    train::TrainResult result = train::train_network(*net, ds, rc.train, rc.loss, out_dir);
    if (out_summary_json) {
      cfg::Json j{{"checkpoint", result.checkpoint_path},
                  {"log", result.log_path},
                  {"final_loss", result.final_loss},
                  {"clamped_pixels", result.clamped_pixels}};
      *out_summary_json = dup_string(j.dump(2));
    }
  });
}

fdnet_status fdnet_evaluate(const char* checkpoint_path, const char* data_dir,
                            const char* options_json, char** out_metrics_json) {
  return guarded([&] {
    require_arg(checkpoint_path, "checkpoint_path");
    require_arg(data_dir, "data_dir");
    require_arg(out_metrics_json, "out_metrics_json");
    PredictOptions o = parse_predict_options(options_json, "options");
    auto net = nn::Network::load(checkpoint_path);
    data::Dataset ds = data::Dataset::open(data_dir);
    train::EvalOptions eo;
    eo.scales = o.scales;
    eo.flip = o.flip;
    eo.trimap_widths = o.trimap_widths;
    *out_metrics_json = dup_string(train::evaluate(*net, ds, eo).to_json().dump(2));
  });
}

fdnet_status fdnet_predict_file(const char* checkpoint_path, const char* image_ppm,
                                const char* out_pgm, const char* options_json) {
  return guarded([&] {
    require_arg(checkpoint_path, "checkpoint_path");
    require_arg(image_ppm, "image_ppm");
    require_arg(out_pgm, "out_pgm");
    PredictOptions o = parse_predict_options(options_json, "options");
    auto net = nn::Network::load(checkpoint_path);
    Tensor image = data::read_ppm(image_ppm);
    std::array<double, 3> means;
    if (o.means.size() == 3) {
      std::copy(o.means.begin(), o.means.end(), means.begin());
    } else {
      int64_t hw = static_cast<int64_t>(image.dim(1)) * image.dim(2);
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int64_t p = 0; p < hw; ++p) s += image[c * hw + p];
        means[static_cast<size_t>(c)] = s / static_cast<double>(hw);
      }
    }
    train::Prediction pred = train::predict_multiscale(*net, image, o.scales, o.flip, means);
    data::write_pgm(pred.labels, out_pgm);
  });
}

fdnet_status fdnet_gradcheck(const char* selector, char** out_report_json) {
  return guarded([&] {
    require_arg(selector, "selector");
    require_arg(out_report_json, "out_report_json");
    cfg::Json report = cfg::Json::array();
    for (const train::GradCheckEntry& e : train::run_gradcheck(selector))
      report.push_back({{"op", e.op}, {"max_rel_err", e.max_rel_err}});
    *out_report_json = dup_string(report.dump(2));
  });
}

fdnet_status fdnet_gradcheck_ops(char** out_names_json) {
  return guarded([&] {
    require_arg(out_names_json, "out_names_json");
    cfg::Json names = train::gradcheck_ops();
    *out_names_json = dup_string(names.dump());
  });
}

fdnet_status fdnet_bands_render(const char* labels_pgm, const char* options_json,
                                const char* out_pgm) {
  return guarded([&] {
    require_arg(labels_pgm, "labels_pgm");
    require_arg(out_pgm, "out_pgm");
    cfg::Json j = parse_options(options_json, "options");
    cfg::require_object(j, "options");
    cfg::reject_unknown(j, {"kernels", "ignore_value"}, "options");
    loss::LossConfig cfg;
    cfg.kernels = cfg::get_int_list_or(j, "kernels", "options", cfg.kernels);
    cfg.alpha.assign(cfg.kernels.size() + 1, 1.0);  // geometry only
    cfg.class_count = 256;
    cfg.validate();
    int ignore = cfg::get_int_or(j, "ignore_value", "options", data::kIgnoreValue);

    Raster labels = data::read_pgm(labels_pgm);
    loss::BandMap bm = loss::band_partition(labels, cfg, ignore);
    Raster render(bm.bands.h, bm.bands.w);
    for (int64_t i = 0; i < render.size(); ++i)
      render.v[static_cast<size_t>(i)] =
          std::min<int32_t>(255, bm.bands.v[static_cast<size_t>(i)] * 50);
    data::write_pgm(render, out_pgm);
  });
}

}  // extern "C"
