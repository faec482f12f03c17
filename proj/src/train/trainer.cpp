#include "train/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "data/augment.hpp"
#include "train/predict.hpp"

namespace fdnet::train {
namespace {

namespace fs = std::filesystem;
using detail::require;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string checkpoint_name(int iter_1based) {
  std::ostringstream os;
  os << "ckpt-" << std::setw(6) << std::setfill('0') << iter_1based << ".fdnet";
  return os.str();
}

}  // namespace

TrainResult train_network(nn::Network& net, const data::Dataset& ds, const TrainConfig& tc,
                          const loss::LossConfig& lc, const std::string& out_dir) {
  tc.validate();
  lc.validate();
  require(ds.size() > 0, ErrorKind::invalid_config, "train: dataset is empty");
  require(net.spec().class_count == ds.meta().class_count, ErrorKind::invalid_config,
          cat("train: network has ", net.spec().class_count, " classes, dataset has ",
              ds.meta().class_count));
  require(lc.class_count == net.spec().class_count, ErrorKind::invalid_config,
          cat("train: loss is configured for ", lc.class_count, " classes, network has ",
              net.spec().class_count));
  int g = net.granularity();
  require(tc.crop % g == 0 && tc.crop >= g, ErrorKind::invalid_config,
          cat("train.crop: must be a positive multiple of the network granularity ", g));

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(fs::is_directory(out_dir), ErrorKind::io, cat(out_dir, ": cannot create output dir"));

  TrainResult result;
  result.log_path = (fs::path(out_dir) / "train_log.csv").string();
  std::ofstream log(result.log_path, std::ios::trunc);
  require(static_cast<bool>(log), ErrorKind::io, cat(result.log_path, ": cannot open log"));
  log << "iter,lr,loss,eval_miou\n";

  Rng rng(tc.seed);
  SgdOptimizer opt(net.params());
  int ignore = ds.meta().ignore_value;
  int64_t hw = static_cast<int64_t>(tc.crop) * tc.crop;

  for (int iter = 0; iter < tc.max_iter; ++iter) {
    double lr = poly_lr(iter, tc);

    Tensor batch({tc.batch_size, 3, tc.crop, tc.crop});
    std::vector<Raster> gts;
    std::vector<loss::BandMap> bands;
    for (int b = 0; b < tc.batch_size; ++b) {
      data::Sample s = ds.load(rng.uniform_int(0, ds.size() - 1));
      s = data::random_crop_flip(s, tc.crop, ds.meta().channel_means, ignore, rng);
      for (int c = 0; c < 3; ++c)
        for (int64_t p = 0; p < hw; ++p)
          batch[((static_cast<int64_t>(b) * 3 + c) * hw) + p] = s.image[c * hw + p];
      bands.push_back(loss::band_partition(s.labels, lc, ignore));
      gts.push_back(std::move(s.labels));
    }

    nn::ForwardResult fr = net.forward(make_leaf(batch), /*training=*/true,
                                       /*with_aux=*/net.spec().deep_supervision);
    loss::LossDiagnostics diag;
    Value loss = loss::deep_supervision_loss(fr.logits, gts, bands, lc, ignore, &diag);
    result.clamped_pixels += diag.clamped_pixels;
    double loss_value = loss->value[0];
    require(std::isfinite(loss_value), ErrorKind::runtime,
            cat("training diverged at iteration ", iter, ": loss=", loss_value));

    zero_grads(net.params());
    backward(loss);
    opt.step(net.params(), lr, tc.momentum, tc.weight_decay);

    log << iter << "," << fmt(lr) << "," << fmt(loss_value) << ",";
    if (tc.eval_interval > 0 && (iter + 1) % tc.eval_interval == 0)
      log << fmt(evaluate(net, ds, EvalOptions{}).miou);
    log << "\n";
    result.final_loss = loss_value;

    if (tc.checkpoint_interval > 0 && (iter + 1) % tc.checkpoint_interval == 0 &&
        iter + 1 < tc.max_iter)
      net.save((fs::path(out_dir) / checkpoint_name(iter + 1)).string());
  }

  result.checkpoint_path = (fs::path(out_dir) / "ckpt-final.fdnet").string();
  net.save(result.checkpoint_path);
  log.flush();
  require(static_cast<bool>(log), ErrorKind::io, cat(result.log_path, ": write failed"));
  return result;
}

}  // namespace fdnet::train
