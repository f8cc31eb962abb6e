#include "screensum/model_io.h"

#include <sstream>

#include "screensum/numcore/checkpoint.h"

namespace screensum {

namespace {

constexpr const char* kPrefix = "fixed.";

std::string num(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

void put_net(std::map<std::string, std::string>& meta, const TpNetConfig& c) {
  meta["embed_dim"] = std::to_string(c.embed_dim);
  meta["hidden"] = std::to_string(c.hidden);
  meta["tau"] = num(c.tau);
  meta["window_fraction"] = num(c.window_fraction);
  meta["dropout"] = num(c.dropout);
}

const std::string& need(const std::map<std::string, std::string>& meta, const std::string& key,
                        const std::filesystem::path& path) {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError(path.string() + ": checkpoint metadata lacks '" + key + "'");
  return it->second;
}

TpNetConfig get_net(const std::map<std::string, std::string>& meta, const std::filesystem::path& path) {
  TpNetConfig c;
  c.embed_dim = std::stoul(need(meta, "embed_dim", path));
  c.hidden = std::stoul(need(meta, "hidden", path));
  c.tau = std::stod(need(meta, "tau", path));
  c.window_fraction = std::stod(need(meta, "window_fraction", path));
  c.dropout = std::stod(need(meta, "dropout", path));
  return c;
}

}  // namespace

void save_tpnet(const std::filesystem::path& path, const TpNetConfig& config, const nc::ParameterSet& params) {
  std::map<std::string, std::string> meta{{"kind", "tpnet"}};
  put_net(meta, config);
  nc::save_checkpoint(path, params, meta);
}

TpNetCheckpoint load_tpnet(const std::filesystem::path& path) {
  nc::Checkpoint ckpt = nc::load_checkpoint(path);
  if (need(ckpt.metadata, "kind", path) != "tpnet")
    throw FormatError(path.string() + ": not a TP network checkpoint (kind '" + ckpt.metadata["kind"] + "')");
  return {get_net(ckpt.metadata, path), std::move(ckpt.params)};
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::map<std::string, std::string> meta{{"kind", "model"}};
  put_net(meta, model.config.net);
  meta["model"] = std::string(model_name(model.config.kind));
  meta["fixed_tps"] = std::string(fixed_tps_name(model.config.fixed_tps));
  meta["charscore_union"] = model.config.charscore_union ? "1" : "0";
  meta["sigma_fraction"] = num(model.config.sigma_fraction);
  for (std::size_t j = 0; j < kNumTurningPoints; ++j) meta["center" + std::to_string(j)] = num(model.config.centers[j]);

  nc::ParameterSet all = model.params;
  if (model.fixed_tp_net) {
    for (const auto& [name, p] : *model.fixed_tp_net) all.add(kPrefix + name, p.value);
  }
  nc::save_checkpoint(path, all, meta);
}

Model load_model(const std::filesystem::path& path) {
  nc::Checkpoint ckpt = nc::load_checkpoint(path);
  const auto& meta = ckpt.metadata;
  if (need(meta, "kind", path) != "model")
    throw FormatError(path.string() + ": not a summarization model checkpoint");
  Model model;
  model.config.net = get_net(meta, path);
  const auto kind = parse_model(need(meta, "model", path));
  const auto fixed = parse_fixed_tps(need(meta, "fixed_tps", path));
  if (!kind || !fixed) throw FormatError(path.string() + ": unknown model kind or fixed-TP mode");
  model.config.kind = *kind;
  model.config.fixed_tps = *fixed;
  model.config.charscore_union = need(meta, "charscore_union", path) == "1";
  model.config.sigma_fraction = std::stod(need(meta, "sigma_fraction", path));
  for (std::size_t j = 0; j < kNumTurningPoints; ++j)
    model.config.centers[j] = std::stod(need(meta, "center" + std::to_string(j), path));

  nc::ParameterSet fixed_net;
  for (const auto& [name, p] : ckpt.params) {
    if (name.rfind(kPrefix, 0) == 0) fixed_net.add(name.substr(std::string(kPrefix).size()), p.value);
    else model.params.add(name, p.value);
  }
  if (model.config.fixed_tps == FixedTps::OneHot) {
    if (fixed_net.size() == 0) throw FormatError(path.string() + ": one-hot model lacks its fixed TP network");
    model.fixed_tp_net = std::move(fixed_net);
  }
  return model;
}

}  // namespace screensum
