#pragma once

#include <cstdint>

#include "gcdc/checkpoint.hpp"
#include "gcdc/nn.hpp"
#include "gcdc/training.hpp"

namespace gcdc {

using nn::Index;
using nn::Mat;

struct BaeConfig {
  Index block_dim = 0;
  Index latent_dim = 16;
  Index hidden = 64;

  void validate() const;
};

/// One (mean, std) pair shared by every residual entry, so the BAE input
/// scaling inverts at decode time with O(1) side information.
struct ResidualScale {
  double mean = 0.0;
  double std = 1.0;

  static ResidualScale fit(const Mat& residuals);
  Mat apply(const Mat& residuals) const { return (residuals.array() - mean) / std; }
  Mat invert(const Mat& normalized) const { return (normalized.array() * std + mean).matrix(); }
};

/// Block-wise residual autoencoder: x^R = denorm(D(E(norm(x - y)))) + y.
class BaeModel {
 public:
  BaeModel() = default;
  BaeModel(const BaeConfig& config, std::uint64_t seed);

  const BaeConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  Mat encode(const Mat& x, const Mat& y) const;
  /// Denormalized residual estimate D(latent).
  Mat decode_residual(const Mat& latents) const;
  Mat decode(const Mat& latents, const Mat& y) const;

  /// Operates on normalized residuals.
  Mat forward_train(const Mat& normalized_residuals);
  void backward(const Mat& d_out);

  nn::ParameterList parameters();
  std::size_t parameter_count() const;
  void round_to_float() { nn::round_to_float(parameters()); }

  nn::Checkpoint to_checkpoint() const;
  static BaeModel from_checkpoint(const nn::Checkpoint& ckpt);

  ResidualScale scale;
  nn::FeedForward encoder;
  nn::FeedForward decoder;

 private:
  BaeConfig config_;
  std::uint64_t seed_ = 0;
};

struct BaeTrainResult {
  BaeModel model;
  TrainLog log;  // losses are MSE(x, x^R) in data units
};

/// Fits the residual scale on x - y, then trains.
BaeTrainResult train_bae(const Mat& x, const Mat& y, const BaeConfig& config, const TrainOptions& options,
                         std::uint64_t init_seed);

}  // namespace gcdc
