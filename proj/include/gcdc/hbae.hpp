#pragma once

#include <cstdint>

#include "gcdc/checkpoint.hpp"
#include "gcdc/nn.hpp"
#include "gcdc/training.hpp"

namespace gcdc {

using nn::Index;
using nn::Mat;

struct HbaeConfig {
  Index block_dim = 0;
  Index hyper_k = 1;
  Index embed_dim = 128;
  Index hidden = 256;
  Index latent_dim = 128;
  Index key_dim = 0;  // d_k; 0 means embed_dim. d_v is always embed_dim.
  bool attention = true;

  Index d_k() const { return key_dim > 0 ? key_dim : embed_dim; }
  void validate() const;
};

/// Hyper-block autoencoder. Inputs are (hyperblocks * k) x D matrices whose
/// consecutive runs of k rows form one hyper-block.
class HbaeModel {
 public:
  HbaeModel() = default;
  HbaeModel(const HbaeConfig& config, std::uint64_t seed);

  const HbaeConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  /// Per-block embeddings e (rows x embed_dim).
  Mat embed(const Mat& blocks) const;
  /// Atten(norm(e)) + e over each hyper-block; identity when attention is off.
  Mat mix(const Mat& e, bool decoder_side) const;
  Mat encode(const Mat& blocks) const;
  Mat decode(const Mat& latents) const;
  Mat reconstruct(const Mat& blocks) const { return decode(encode(blocks)); }

  Mat forward_train(const Mat& blocks);
  void backward(const Mat& d_reconstruction);

  nn::ParameterList parameters();
  std::size_t parameter_count() const;
  void round_to_float() { nn::round_to_float(parameters()); }

  nn::Checkpoint to_checkpoint() const;
  static HbaeModel from_checkpoint(const nn::Checkpoint& ckpt);

  nn::FeedForward embed_encoder;
  nn::LayerNorm enc_norm;
  nn::SelfAttention enc_attention;
  nn::Linear to_latent;
  nn::Linear from_latent;
  nn::LayerNorm dec_norm;
  nn::SelfAttention dec_attention;
  nn::FeedForward embed_decoder;

 private:
  HbaeConfig config_;
  std::uint64_t seed_ = 0;
};

/// Rows of k-block groups: (H x k*width) view of a (H*k) x width matrix.
Mat flatten_groups(const Mat& rows, Index k);
Mat unflatten_groups(const Mat& flat, Index k);

struct HbaeTrainResult {
  HbaeModel model;
  TrainLog log;
};

/// `hyperblocks` is (H*k) x D. Minimizes MSE between input and reconstruction.
HbaeTrainResult train_hbae(const Mat& hyperblocks, const HbaeConfig& config, const TrainOptions& options,
                           std::uint64_t init_seed);
/// Continues training an existing model.
TrainLog train_hbae(HbaeModel& model, const Mat& hyperblocks, const TrainOptions& options);

}  // namespace gcdc
