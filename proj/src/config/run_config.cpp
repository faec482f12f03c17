#include "config/run_config.hpp"

#include <fstream>
#include <sstream>

namespace fdnet {

RunConfig RunConfig::from_json(const cfg::Json& j) {
  cfg::require_object(j, "config");
  cfg::reject_unknown(j, {"network", "train", "loss", "data"}, "config");
  RunConfig rc;
  if (j.contains("network")) rc.network = nn::NetworkSpec::from_json(j["network"], "network");
  rc.network.validate();
  if (j.contains("train")) rc.train = train::TrainConfig::from_json(j["train"], "train");
  rc.train.validate();

  cfg::Json lj = j.contains("loss") ? j["loss"] : cfg::Json::object();
  cfg::require_object(lj, "loss");
  if (!lj.contains("class_count")) lj["class_count"] = rc.network.class_count;
  rc.loss = loss::LossConfig::from_json(lj, "loss");
  rc.loss.validate();

  if (j.contains("data")) {
    const cfg::Json& dj = j["data"];
    cfg::require_object(dj, "data");
    cfg::reject_unknown(dj, {"dir", "eval_dir"}, "data");
    rc.data_dir = cfg::get_string_or(dj, "dir", "data", "");
    rc.eval_dir = cfg::get_string_or(dj, "eval_dir", "data", "");
  }
  return rc;
}

RunConfig RunConfig::from_text(const std::string& text, const std::string& what) {
  return from_json(cfg::parse_text(text, what));
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  detail::require(static_cast<bool>(is), ErrorKind::io, cat(path, ": cannot open config"));
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_text(buf.str(), path);
}

cfg::Json RunConfig::to_json() const {
  cfg::Json j{{"network", network.to_json()}, {"train", train.to_json()},
              {"loss", loss.to_json()}};
  cfg::Json dj = cfg::Json::object();
  if (!data_dir.empty()) dj["dir"] = data_dir;
  if (!eval_dir.empty()) dj["eval_dir"] = eval_dir;
  j["data"] = dj;
  return j;
}

}  // namespace fdnet
