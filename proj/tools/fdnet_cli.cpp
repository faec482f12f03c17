// Command-line front end. Deliberately speaks only the public C API plus the
// vendored header-only utilities; all real work happens behind fdnet.h.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fdnet/fdnet.h"

namespace {

using Json = nlohmann::json;

constexpr double kGradTolerance = 1e-4;

int exit_code_of(fdnet_status status) {
  if (status == FDNET_OK) return 0;
  return status == FDNET_ERR_INVALID_CONFIG ? 2 : 1;
}

int report_failure(fdnet_status status) {
  std::cerr << "error: " << fdnet_last_error() << "\n";
  return exit_code_of(status);
}

std::string owned(char* s) {
  std::string out = s ? s : "";
  fdnet_string_free(s);
  return out;
}

bool read_text_file(const std::string& path, std::string& out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  std::ostringstream buf;
  buf << is.rdbuf();
  out = buf.str();
  return true;
}

bool write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << text;
  return static_cast<bool>(os);
}

// "0.6:1.4:0.2" expands to an inclusive range; otherwise a comma list.
std::vector<double> parse_scales(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double start = 0, stop = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
      throw CLI::ValidationError("--scales", "expected start:stop:step with positive step");
    for (double s = start; s <= stop + 1e-9; s += step) out.push_back(s);
  } else {
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      if (tok.empty()) continue;
      out.push_back(std::stod(tok));
    }
  }
  if (out.empty()) throw CLI::ValidationError("--scales", "no scales given");
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const char* flag) {
  std::vector<int> out;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw CLI::ValidationError(flag, "no values given");
  return out;
}

struct NetworkHandle {
  fdnet_network* net = nullptr;
  ~NetworkHandle() { fdnet_network_free(net); }
};

int run_gen(const std::string& spec_path, const std::string& out_dir) {
  std::string text;
  if (!read_text_file(spec_path, text)) {
    std::cerr << "error: cannot read " << spec_path << "\n";
    return 1;
  }
  fdnet_status st = fdnet_dataset_generate(text.c_str(), out_dir.c_str());
  if (st != FDNET_OK) return report_failure(st);
  fdnet_dataset* ds = nullptr;
  st = fdnet_dataset_open(out_dir.c_str(), &ds);
  if (st != FDNET_OK) return report_failure(st);
  int64_t n = 0;
  fdnet_dataset_size(ds, &n);
  fdnet_dataset_free(ds);
  std::cout << "generated " << n << " samples in " << out_dir << "\n";
  return 0;
}

int run_train(const std::string& config_path, const std::string& out_dir,
              const std::string& data_override, const std::string& seed_override,
              int max_iter_override) {
  std::string text;
  if (!read_text_file(config_path, text)) {
    std::cerr << "error: cannot read " << config_path << "\n";
    return 1;
  }
  Json config = Json::parse(text, nullptr, false);
  if (config.is_discarded() || !config.is_object()) {
    std::cerr << "error: " << config_path << ": not a JSON object\n";
    return 2;
  }
  // flags win over config fields
  if (!data_override.empty()) config["data"]["dir"] = data_override;
  if (!seed_override.empty()) config["train"]["seed"] = std::stoull(seed_override);
  if (max_iter_override > 0) config["train"]["max_iter"] = max_iter_override;

  char* summary = nullptr;
  fdnet_status st = fdnet_train(config.dump().c_str(), out_dir.c_str(), &summary);
  if (st != FDNET_OK) return report_failure(st);
  std::cout << owned(summary) << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data_dir,
             const std::string& scales, bool flip, const std::string& widths,
             const std::string& out_path) {
  Json options{{"scales", parse_scales(scales)},
               {"flip", flip},
               {"trimap_widths", parse_int_list(widths, "--trimap-widths")}};
  char* metrics = nullptr;
  fdnet_status st =
      fdnet_evaluate(checkpoint.c_str(), data_dir.c_str(), options.dump().c_str(), &metrics);
  if (st != FDNET_OK) return report_failure(st);
  std::string text = owned(metrics);
  if (!out_path.empty() && !write_text_file(out_path, text + "\n")) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return 1;
  }
  std::cout << text << "\n";
  return 0;
}

int run_predict(const std::string& checkpoint, const std::string& image,
                const std::string& out_path, const std::string& scales, bool flip) {
  Json options{{"scales", parse_scales(scales)}, {"flip", flip}};
  fdnet_status st = fdnet_predict_file(checkpoint.c_str(), image.c_str(), out_path.c_str(),
                                       options.dump().c_str());
  if (st != FDNET_OK) return report_failure(st);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int run_gradcheck(const std::string& ops) {
  char* report_text = nullptr;
  fdnet_status st = fdnet_gradcheck(ops.c_str(), &report_text);
  if (st != FDNET_OK) return report_failure(st);
  Json report = Json::parse(owned(report_text));
  bool all_ok = true;
  std::cout << "op                    max_rel_err   status\n";
  for (const auto& entry : report) {
    double err = entry["max_rel_err"].get<double>();
    bool ok = err < kGradTolerance;
    all_ok = all_ok && ok;
    std::string name = entry["op"].get<std::string>();
    std::cout << name << std::string(name.size() < 22 ? 22 - name.size() : 1, ' ');
    std::ostringstream v;
    v.precision(3);
    v << std::scientific << err;
    std::cout << v.str() << "     " << (ok ? "ok" : "FAIL") << "\n";
  }
  if (!all_ok) {
    std::cerr << "error: at least one op exceeded the " << kGradTolerance << " tolerance\n";
    return 1;
  }
  return 0;
}

int run_bands(const std::string& labels, const std::string& kernels, int ignore_value,
              const std::string& out_path) {
  Json options{{"kernels", parse_int_list(kernels, "--kernels")}, {"ignore_value", ignore_value}};
  fdnet_status st =
      fdnet_bands_render(labels.c_str(), options.dump().c_str(), out_path.c_str());
  if (st != FDNET_OK) return report_failure(st);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int run_inspect(const std::string& config_path, const std::string& seed_text) {
  std::string text;
  if (!read_text_file(config_path, text)) {
    std::cerr << "error: cannot read " << config_path << "\n";
    return 1;
  }
  Json config = Json::parse(text, nullptr, false);
  if (config.is_discarded() || !config.is_object()) {
    std::cerr << "error: " << config_path << ": not a JSON object\n";
    return 2;
  }
  Json network = config.contains("network") ? config["network"] : Json::object();
  uint64_t seed = 0;
  if (!seed_text.empty())
    seed = std::stoull(seed_text);
  else if (config.contains("train") && config["train"].contains("seed"))
    seed = config["train"]["seed"].get<uint64_t>();

  NetworkHandle h;
  fdnet_status st = fdnet_network_create(network.dump().c_str(), seed, &h.net);
  if (st != FDNET_OK) return report_failure(st);
  uint64_t params = 0;
  fdnet_network_param_count(h.net, &params);
  char* connectivity = nullptr;
  st = fdnet_network_connectivity(h.net, &connectivity);
  if (st != FDNET_OK) return report_failure(st);
  std::cout << "parameters: " << params << "\n" << owned(connectivity);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fully dense segmentation network workbench"};
  app.require_subcommand(1);

  std::string spec_path, out_dir;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic shapes dataset");
  gen->add_option("--spec", spec_path, "synthetic spec JSON file")->required();
  gen->add_option("--out", out_dir, "output dataset directory")->required();

  std::string config_path, data_override, seed_override;
  int max_iter_override = 0;
  CLI::App* train = app.add_subcommand("train", "train a network from a run config");
  train->add_option("--config", config_path, "run config JSON file")->required();
  train->add_option("--out", out_dir, "output directory for checkpoints and log")->required();
  train->add_option("--data", data_override, "override data.dir");
  train->add_option("--seed", seed_override, "override train.seed");
  train->add_option("--max-iter", max_iter_override, "override train.max_iter");

  std::string checkpoint, data_dir, scales = "1.0", widths = "1,5,10,20,40", metrics_out;
  bool flip = false;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--scales", scales, "comma list or start:stop:step range");
  eval->add_flag("--flip", flip, "average in horizontally flipped passes");
  eval->add_option("--trimap-widths", widths, "boundary band widths for the trimap curve");
  eval->add_option("--out", metrics_out, "also write metrics JSON to this file");

  std::string image_path, predict_out, predict_scales = "1.0";
  bool predict_flip = false;
  CLI::App* predict = app.add_subcommand("predict", "predict a label raster for one image");
  predict->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  predict->add_option("--image", image_path, "input PPM image")->required();
  predict->add_option("--out", predict_out, "output PGM label raster")->required();
  predict->add_option("--scales", predict_scales, "comma list or start:stop:step range");
  predict->add_flag("--flip", predict_flip, "average in horizontally flipped passes");

  std::string ops = "all";
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  gradcheck->add_option("--ops", ops, "'all' or one op name");

  std::string labels_path, kernels = "10,20,30,40", bands_out;
  int ignore_value = 255;
  CLI::App* bands = app.add_subcommand("bands", "render the boundary band partition");
  bands->add_option("--labels", labels_path, "label raster (PGM)")->required();
  bands->add_option("--kernels", kernels, "dilation radii, strictly increasing");
  bands->add_option("--ignore", ignore_value, "ignore label value");
  bands->add_option("--out", bands_out, "output PGM visualization")->required();

  std::string inspect_config, inspect_seed;
  CLI::App* inspect = app.add_subcommand("inspect", "parameter count and wiring report");
  inspect->add_option("--config", inspect_config, "run config JSON file")->required();
  inspect->add_option("--seed", inspect_seed, "initialization seed (default train.seed)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen(spec_path, out_dir);
    if (train->parsed())
      return run_train(config_path, out_dir, data_override, seed_override, max_iter_override);
    if (eval->parsed()) return run_eval(checkpoint, data_dir, scales, flip, widths, metrics_out);
    if (predict->parsed())
      return run_predict(checkpoint, image_path, predict_out, predict_scales, predict_flip);
    if (gradcheck->parsed()) return run_gradcheck(ops);
    if (bands->parsed()) return run_bands(labels_path, kernels, ignore_value, bands_out);
    if (inspect->parsed()) return run_inspect(inspect_config, inspect_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
