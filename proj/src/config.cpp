#include "gcdc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "gcdc/io.hpp"
#include "gcdc/parallel.hpp"

namespace gcdc {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  require(j.is_object(), Errc::invalid_argument, where + " must be an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : j.items())
    require(allowed.count(key) == 1, Errc::invalid_argument, "unknown config key '" + where + "." + key + "'");
}

Shape shape_of(const json& j, const std::string& what) {
  require(j.is_array(), Errc::invalid_argument, what + " must be an array");
  Shape s;
  for (const auto& v : j) {
    require(v.is_number_unsigned() && v.get<std::size_t>() > 0, Errc::invalid_argument,
            what + " entries must be positive integers");
    s.push_back(v.get<std::size_t>());
  }
  return s;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

void PipelineConfig::resolve(const Shape& shape) {
  require(tau > 0.0 && std::isfinite(tau), Errc::invalid_argument, "tau must be positive");
  require(bins.hbae > 0.0 && bins.bae > 0.0, Errc::invalid_argument, "latent bins must be positive");
  require(!bins.gae || *bins.gae > 0.0, Errc::invalid_argument, "GAE bin must be positive");
  ae_blocks.validate_for(shape);
  if (gae_block.empty()) gae_block = ae_blocks.block_shape;
  BlockSpec{gae_block, 1, 0}.validate_for(shape);
  if (group_axis) {
    require(*group_axis < shape.size(), Errc::invalid_spec, "group_axis out of range");
    require(gae_block[*group_axis] == 1, Errc::invalid_spec, "GAE block must have extent 1 along the group axis");
  }
  hbae.block_dim = static_cast<Index>(ae_blocks.block_dim());
  hbae.hyper_k = static_cast<Index>(ae_blocks.hyper_k);
  bae.block_dim = hbae.block_dim;
  hbae.validate();
  bae.validate();
}

unsigned PipelineConfig::effective_workers() const { return workers > 0 ? workers : default_workers(); }

PipelineConfig config_from_json(const json& j) {
  reject_unknown(j, "config",
                 {"dataset", "blocks", "normalization", "hbae", "bae", "training", "bins", "tau", "taus", "seed",
                  "workers", "policy", "backend", "output"});
  PipelineConfig c;
  try {
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      reject_unknown(d, "dataset", {"path", "header", "synthetic"});
      if (d.contains("path")) c.dataset_path = d.at("path").get<std::string>();
      if (d.contains("header")) c.header_path = d.at("header").get<std::string>();
      if (d.contains("synthetic")) {
        const auto& s = d.at("synthetic");
        reject_unknown(s, "dataset.synthetic", {"kind", "shape", "seed"});
        SyntheticSource src;
        src.kind = synthetic_kind_from_string(s.value("kind", "smooth"));
        src.shape = shape_of(s.at("shape"), "dataset.synthetic.shape");
        read(s, "seed", src.seed);
        c.synthetic = src;
      }
    }
    if (j.contains("blocks")) {
      const auto& b = j.at("blocks");
      reject_unknown(b, "blocks", {"ae", "hyper_k", "hyper_axis", "gae"});
      if (b.contains("ae")) c.ae_blocks.block_shape = shape_of(b.at("ae"), "blocks.ae");
      read(b, "hyper_k", c.ae_blocks.hyper_k);
      read(b, "hyper_axis", c.ae_blocks.hyper_axis);
      if (b.contains("gae")) c.gae_block = shape_of(b.at("gae"), "blocks.gae");
    }
    if (j.contains("normalization")) {
      const auto& n = j.at("normalization");
      reject_unknown(n, "normalization", {"mode", "group_axis"});
      if (n.contains("mode")) c.norm_mode = norm_mode_from_string(n.at("mode").get<std::string>());
      if (n.contains("group_axis") && !n.at("group_axis").is_null())
        c.group_axis = n.at("group_axis").get<std::size_t>();
    }
    if (j.contains("hbae")) {
      const auto& h = j.at("hbae");
      reject_unknown(h, "hbae", {"embed_dim", "hidden", "latent_dim", "key_dim", "attention"});
      read(h, "embed_dim", c.hbae.embed_dim);
      read(h, "hidden", c.hbae.hidden);
      read(h, "latent_dim", c.hbae.latent_dim);
      read(h, "key_dim", c.hbae.key_dim);
      read(h, "attention", c.hbae.attention);
    }
    if (j.contains("bae")) {
      const auto& b = j.at("bae");
      reject_unknown(b, "bae", {"latent_dim", "hidden"});
      read(b, "latent_dim", c.bae.latent_dim);
      read(b, "hidden", c.bae.hidden);
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      reject_unknown(t, "training", {"hbae_epochs", "bae_epochs", "batch", "lr"});
      read(t, "hbae_epochs", c.training.hbae_epochs);
      read(t, "bae_epochs", c.training.bae_epochs);
      read(t, "batch", c.training.batch);
      read(t, "lr", c.training.lr);
    }
    if (j.contains("bins")) {
      const auto& b = j.at("bins");
      reject_unknown(b, "bins", {"hbae", "bae", "gae"});
      read(b, "hbae", c.bins.hbae);
      read(b, "bae", c.bins.bae);
      if (b.contains("gae") && !b.at("gae").is_null()) c.bins.gae = b.at("gae").get<double>();
    }
    read(j, "tau", c.tau);
    read(j, "taus", c.sweep_taus);
    read(j, "seed", c.seed);
    read(j, "workers", c.workers);
    if (j.contains("policy")) c.policy = archive::ratio_policy_from_string(j.at("policy").get<std::string>());
    if (j.contains("backend")) c.backend = codec::backend_from_string(j.at("backend").get<std::string>());
    if (j.contains("output")) {
      const auto& o = j.at("output");
      reject_unknown(o, "output", {"archive", "models", "report", "decompressed", "sweep"});
      if (o.contains("archive")) c.output.archive = o.at("archive").get<std::string>();
      if (o.contains("models")) c.output.models = o.at("models").get<std::string>();
      if (o.contains("report")) c.output.report = o.at("report").get<std::string>();
      if (o.contains("decompressed")) c.output.decompressed = o.at("decompressed").get<std::string>();
      if (o.contains("sweep")) c.output.sweep = o.at("sweep").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("bad config value: ") + e.what());
  }
  return c;
}

json to_json(const PipelineConfig& c) {
  json j;
  json dataset = json::object();
  if (!c.dataset_path.empty()) dataset["path"] = c.dataset_path.string();
  if (!c.header_path.empty()) dataset["header"] = c.header_path.string();
  if (c.synthetic)
    dataset["synthetic"] = {{"kind", to_string(c.synthetic->kind)},
                            {"shape", c.synthetic->shape},
                            {"seed", c.synthetic->seed}};
  j["dataset"] = dataset;
  j["blocks"] = {{"ae", c.ae_blocks.block_shape},
                 {"hyper_k", c.ae_blocks.hyper_k},
                 {"hyper_axis", c.ae_blocks.hyper_axis},
                 {"gae", c.gae_block}};
  j["normalization"] = {{"mode", to_string(c.norm_mode)},
                        {"group_axis", c.group_axis ? json(*c.group_axis) : json(nullptr)}};
  j["hbae"] = {{"embed_dim", c.hbae.embed_dim},
               {"hidden", c.hbae.hidden},
               {"latent_dim", c.hbae.latent_dim},
               {"key_dim", c.hbae.key_dim},
               {"attention", c.hbae.attention}};
  j["bae"] = {{"latent_dim", c.bae.latent_dim}, {"hidden", c.bae.hidden}};
  j["training"] = {{"hbae_epochs", c.training.hbae_epochs},
                   {"bae_epochs", c.training.bae_epochs},
                   {"batch", c.training.batch},
                   {"lr", c.training.lr}};
  j["bins"] = {{"hbae", c.bins.hbae}, {"bae", c.bins.bae}, {"gae", c.bins.gae ? json(*c.bins.gae) : json(nullptr)}};
  j["tau"] = c.tau;
  j["taus"] = c.sweep_taus;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["policy"] = archive::to_string(c.policy);
  j["backend"] = codec::to_string(c.backend);
  j["output"] = {{"archive", c.output.archive.string()},
                 {"models", c.output.models.string()},
                 {"report", c.output.report.string()},
                 {"decompressed", c.output.decompressed.string()},
                 {"sweep", c.output.sweep.string()}};
  return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  auto c = config_from_json(j);
  // Relative dataset paths are taken relative to the config file.
  const auto base = path.parent_path();
  if (!c.dataset_path.empty() && c.dataset_path.is_relative()) c.dataset_path = base / c.dataset_path;
  if (!c.header_path.empty() && c.header_path.is_relative()) c.header_path = base / c.header_path;
  return c;
}

}  // namespace gcdc
