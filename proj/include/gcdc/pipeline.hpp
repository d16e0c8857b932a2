#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcdc/archive.hpp"
#include "gcdc/bae.hpp"
#include "gcdc/codec.hpp"
#include "gcdc/config.hpp"
#include "gcdc/gae.hpp"
#include "gcdc/hbae.hpp"
#include "gcdc/metrics.hpp"
#include "gcdc/tensor.hpp"

namespace gcdc {

/// Reads the configured raw file, or generates the configured synthetic data.
Dataset load_dataset(const PipelineConfig& config);

/// Axis whose slices are reported separately: the group axis, else the first
/// axis with the variable role.
std::optional<std::size_t> variable_axis(const Dataset& ds, const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Models

struct TrainedModels {
  HbaeModel hbae;
  BaeModel bae;
  TrainLog hbae_log;
  TrainLog bae_log;
};

using ProgressFn = std::function<void(const std::string& stage, int epoch, double loss)>;

/// Trains the HBAE, rounds it to 32-bit, then trains the BAE on residuals
/// against the HBAE output from quantized latents. `config` must be resolved.
TrainedModels train_models(const Dataset& ds, const PipelineConfig& config, const ProgressFn& progress = {});

void save_models(const TrainedModels& models, const std::filesystem::path& dir);
TrainedModels load_models(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Autoencoder stage

/// Normalized data cut into AE blocks and hyper-blocks.
struct Prepared {
  Normalization norm;
  BlockSet<float> blocks;
  std::vector<HyperBlock> hypers;
  Mat hyper_rows;  // (hyperblocks * k) x D, k consecutive rows per hyper-block

  Mat block_rows() const { return blocks.rows.cast<double>(); }
};

Prepared prepare(const Dataset& ds, const PipelineConfig& config);

/// Stacks blocks into hyper-block order, repeating padded entries.
Mat gather_hyper_rows(const BlockSet<float>& blocks, const std::vector<HyperBlock>& hypers);

/// HBAE decoder output per block (N x D) from dequantized latents. Each block
/// takes the row of its (unpadded) slot in its hyper-block.
Mat decode_hbae_blocks(const HbaeModel& model, const Mat& latents, const std::vector<HyperBlock>& hypers,
                       std::size_t block_count);

/// Latents rounded through 32-bit and quantized with `bin`.
codec::QuantizedStream quantize_latents(const Mat& latents, double bin);
Mat dequantize_latents(const codec::QuantizedStream& stream, Index rows, Index cols);

struct AeStage {
  Prepared prepared;
  codec::QuantizedStream hbae_codes;  // hyperblocks x latent_dim
  codec::QuantizedStream bae_codes;   // blocks x latent_dim
  Mat y;                              // HBAE prediction per block
  Mat xr;                             // y + BAE residual, normalized units
  Dataset reconstruction;             // x^R in the original domain
  double seconds = 0.0;
};

AeStage run_autoencoders(const Dataset& ds, const TrainedModels& models, const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Guarantee stage and archive

struct GroupSummary {
  double tau = 0.0;  // original units
  double bin = 0.0;
  std::size_t blocks = 0;
  std::size_t corrected_blocks = 0;
  std::size_t coefficients = 0;
  double max_error = 0.0;
};

struct EvalReport {
  double nrmse = 0.0;
  std::vector<double> per_variable_nrmse;
  double max_block_error = 0.0;  // original units, over the evaluation blocks
  Histogram histogram;
  std::map<std::string, double> timings;  // seconds per stage
  // Compress-only fields
  std::optional<double> tau;
  std::vector<GroupSummary> groups;
  std::optional<archive::SizeLedger> ledger;
  std::map<std::string, archive::RatioReport> ratios;  // by policy name

  double mean_variable_nrmse() const;
  nlohmann::json to_json() const;
};

/// Compares two datasets. `block_shape` defines the blocks for max error.
EvalReport evaluate(const Dataset& original, const Dataset& reconstructed, const Shape& block_shape,
                    std::optional<std::size_t> variable_axis, std::size_t histogram_bins = 20);

struct CompressOutput {
  archive::Archive archive;
  std::vector<std::uint8_t> bytes;
  Dataset reconstruction;  // x^G, identical to what decompress returns
  EvalReport report;
};

/// Runs GAE on top of a finished AE stage and writes the archive. Fails with
/// GuaranteeViolated if any block of the decoded archive exceeds its bound.
CompressOutput finish_compress(const Dataset& ds, const AeStage& ae, const TrainedModels& models,
                               const PipelineConfig& config);
CompressOutput compress(const Dataset& ds, const TrainedModels& models, const PipelineConfig& config);

/// Uses only the archive bytes (model weights are embedded).
Dataset decompress(const archive::Archive& archive, unsigned workers = 1);
Dataset decompress(std::span<const std::uint8_t> bytes, unsigned workers = 1);

// ---------------------------------------------------------------------------
// Sweep

struct SweepPoint {
  double tau = 0.0;
  double nrmse = 0.0;
  double mean_variable_nrmse = 0.0;
  double max_error_over_tau = 0.0;  // worst group ratio; <= 1 always
  std::uint64_t counted_bytes = 0;  // under exclude_models
  std::uint64_t file_bytes = 0;
  double ratio_exclude_models = 0.0;
  double ratio_include_models = 0.0;
  std::size_t coefficients = 0;
};

/// Compresses once per tau, reusing one AE stage.
std::vector<SweepPoint> sweep(const Dataset& ds, const TrainedModels& models, const PipelineConfig& config,
                              const std::vector<double>& taus);
std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace gcdc
