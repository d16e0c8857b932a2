#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "gcdc/archive.hpp"
#include "gcdc/bae.hpp"
#include "gcdc/codec.hpp"
#include "gcdc/hbae.hpp"
#include "gcdc/synthetic.hpp"
#include "gcdc/tensor.hpp"

namespace gcdc {

struct SyntheticSource {
  SyntheticKind kind = SyntheticKind::smooth;
  Shape shape;
  std::uint64_t seed = 0;
};

struct TrainingConfig {
  int hbae_epochs = 200;
  int bae_epochs = 200;
  Index batch = 8;
  double lr = 1e-3;
};

struct BinConfig {
  double hbae = 0.005;
  double bae = 0.005;
  /// GAE coefficient bin in normalized units; unset means tau / sqrt(D).
  std::optional<double> gae;
};

struct OutputPaths {
  std::filesystem::path archive = "out.gcdc";
  std::filesystem::path models = "models";
  std::filesystem::path report = "report.json";
  std::filesystem::path decompressed = "out.raw";
  std::filesystem::path sweep = "sweep.csv";
};

/// One declarative description of a run. JSON layout:
///   dataset {path, header, synthetic {kind, shape, seed}}
///   blocks {ae, hyper_k, hyper_axis, gae}
///   normalization {mode, group_axis}
///   hbae {embed_dim, hidden, latent_dim, key_dim, attention}
///   bae {latent_dim, hidden}
///   training {hbae_epochs, bae_epochs, batch, lr}
///   bins {hbae, bae, gae}
///   tau, taus, seed, workers, policy, backend
///   output {archive, models, report, decompressed, sweep}
/// tau is the per-block l2 bound in normalized units; each GAE group uses
/// tau * (its normalization scale) in the original domain.
struct PipelineConfig {
  std::filesystem::path dataset_path;
  std::filesystem::path header_path;
  std::optional<SyntheticSource> synthetic;

  BlockSpec ae_blocks;
  Shape gae_block;

  NormMode norm_mode = NormMode::mean0range1;
  std::optional<std::size_t> group_axis;

  HbaeConfig hbae;  // block_dim and hyper_k are derived from the block spec
  BaeConfig bae;    // block_dim derived
  TrainingConfig training;
  BinConfig bins;

  double tau = 1e-2;
  std::vector<double> sweep_taus = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0: GCDC_WORKERS or logical CPUs
  archive::RatioPolicy policy = archive::RatioPolicy::exclude_models;
  codec::Backend backend = codec::Backend::deflate;
  OutputPaths output;

  /// Checks tau, bins and that both block specs fit `shape`; fills derived dims.
  void resolve(const Shape& shape);
  unsigned effective_workers() const;
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace gcdc
