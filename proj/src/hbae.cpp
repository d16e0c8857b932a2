#include "gcdc/hbae.hpp"

namespace gcdc {

void HbaeConfig::validate() const {
  require(block_dim > 0 && hyper_k > 0 && embed_dim > 0 && hidden > 0 && latent_dim > 0 && d_k() > 0,
          Errc::invalid_argument, "HBAE dimensions must be positive");
  require(latent_dim < hyper_k * embed_dim, Errc::invalid_argument,
          "HBAE latent_dim must be smaller than hyper_k * embed_dim");
}

Mat flatten_groups(const Mat& rows, Index k) {
  require(k >= 1 && rows.rows() % k == 0, Errc::shape_mismatch, "row count is not a multiple of k");
  return Eigen::Map<const Mat>(rows.data(), rows.rows() / k, rows.cols() * k);
}

Mat unflatten_groups(const Mat& flat, Index k) {
  require(k >= 1 && flat.cols() % k == 0, Errc::shape_mismatch, "column count is not a multiple of k");
  return Eigen::Map<const Mat>(flat.data(), flat.rows() * k, flat.cols() / k);
}

HbaeModel::HbaeModel(const HbaeConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
  config.validate();
  Rng rng(seed);
  const Index e = config.embed_dim;
  embed_encoder = nn::FeedForward(config.block_dim, config.hidden, e, rng, "hbae.embed_encoder");
  enc_norm = nn::LayerNorm(e, "hbae.enc_norm");
  enc_attention = nn::SelfAttention(e, config.d_k(), e, rng, "hbae.enc_attention");
  to_latent = nn::Linear(config.hyper_k * e, config.latent_dim, rng, "hbae.to_latent");
  from_latent = nn::Linear(config.latent_dim, config.hyper_k * e, rng, "hbae.from_latent");
  dec_norm = nn::LayerNorm(e, "hbae.dec_norm");
  dec_attention = nn::SelfAttention(e, config.d_k(), e, rng, "hbae.dec_attention");
  embed_decoder = nn::FeedForward(e, config.hidden, config.block_dim, rng, "hbae.embed_decoder");
}

Mat HbaeModel::embed(const Mat& blocks) const {
  require(blocks.cols() == config_.block_dim, Errc::shape_mismatch, "HBAE input width != block_dim");
  require(blocks.rows() % config_.hyper_k == 0, Errc::shape_mismatch, "HBAE input rows not a multiple of hyper_k");
  return embed_encoder(blocks);
}

Mat HbaeModel::mix(const Mat& e, bool decoder_side) const {
  if (!config_.attention) return e;
  const auto& norm = decoder_side ? dec_norm : enc_norm;
  const auto& attention = decoder_side ? dec_attention : enc_attention;
  return attention(norm(e), config_.hyper_k) + e;
}

Mat HbaeModel::encode(const Mat& blocks) const {
  return to_latent(flatten_groups(mix(embed(blocks), false), config_.hyper_k));
}

Mat HbaeModel::decode(const Mat& latents) const {
  require(latents.cols() == config_.latent_dim, Errc::shape_mismatch, "latent width != latent_dim");
  const Mat f = unflatten_groups(from_latent(latents), config_.hyper_k);
  return embed_decoder(mix(f, true));
}

Mat HbaeModel::forward_train(const Mat& blocks) {
  require(blocks.cols() == config_.block_dim, Errc::shape_mismatch, "HBAE input width != block_dim");
  const Index k = config_.hyper_k;
  Mat e = embed_encoder.forward(blocks);
  if (config_.attention) e += enc_attention.forward(enc_norm.forward(e), k);
  const Mat latent = to_latent.forward(flatten_groups(e, k));
  Mat f = unflatten_groups(from_latent.forward(latent), k);
  if (config_.attention) f += dec_attention.forward(dec_norm.forward(f), k);
  return embed_decoder.forward(f);
}

void HbaeModel::backward(const Mat& d_reconstruction) {
  const Index k = config_.hyper_k;
  Mat df = embed_decoder.backward(d_reconstruction);
  if (config_.attention) df += dec_norm.backward(dec_attention.backward(df));
  const Mat d_latent = from_latent.backward(flatten_groups(df, k));
  Mat de = unflatten_groups(to_latent.backward(d_latent), k);
  if (config_.attention) de += enc_norm.backward(enc_attention.backward(de));
  embed_encoder.backward(de);
}

nn::ParameterList HbaeModel::parameters() {
  nn::ParameterList out;
  embed_encoder.collect(out);
  if (config_.attention) {
    enc_norm.collect(out);
    enc_attention.collect(out);
  }
  to_latent.collect(out);
  from_latent.collect(out);
  if (config_.attention) {
    dec_norm.collect(out);
    dec_attention.collect(out);
  }
  embed_decoder.collect(out);
  return out;
}

std::size_t HbaeModel::parameter_count() const { return nn::parameter_count(const_cast<HbaeModel*>(this)->parameters()); }

nn::Checkpoint HbaeModel::to_checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.kind = "hbae";
  ckpt.dims = {static_cast<std::uint32_t>(config_.block_dim), static_cast<std::uint32_t>(config_.hyper_k),
               static_cast<std::uint32_t>(config_.embed_dim),  static_cast<std::uint32_t>(config_.hidden),
               static_cast<std::uint32_t>(config_.latent_dim), static_cast<std::uint32_t>(config_.key_dim),
               static_cast<std::uint32_t>(config_.attention ? 1 : 0)};
  ckpt.seed = seed_;
  nn::store_parameters(ckpt, const_cast<HbaeModel*>(this)->parameters());
  return ckpt;
}

HbaeModel HbaeModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  require(ckpt.kind == "hbae", Errc::corrupt_payload, "checkpoint kind '" + ckpt.kind + "' is not hbae");
  require(ckpt.dims.size() == 7, Errc::corrupt_payload, "hbae checkpoint has wrong dims");
  HbaeConfig c;
  c.block_dim = ckpt.dims[0];
  c.hyper_k = ckpt.dims[1];
  c.embed_dim = ckpt.dims[2];
  c.hidden = ckpt.dims[3];
  c.latent_dim = ckpt.dims[4];
  c.key_dim = ckpt.dims[5];
  c.attention = ckpt.dims[6] != 0;
  HbaeModel model(c, ckpt.seed);
  nn::load_parameters(ckpt, model.parameters());
  return model;
}

namespace {

Mat gather_hyperblocks(const Mat& data, const std::vector<std::size_t>& ids, Index k) {
  Mat out(static_cast<Index>(ids.size()) * k, data.cols());
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.middleRows(static_cast<Index>(i) * k, k) = data.middleRows(static_cast<Index>(ids[i]) * k, k);
  return out;
}

}  // namespace

TrainLog train_hbae(HbaeModel& model, const Mat& hyperblocks, const TrainOptions& options) {
  const Index k = model.config().hyper_k;
  require(hyperblocks.rows() % k == 0 && hyperblocks.rows() > 0, Errc::shape_mismatch,
          "training data is not a whole number of hyper-blocks");
  nn::Adam adam(model.parameters(), nn::AdamOptions{.lr = options.lr});
  const auto samples = static_cast<std::size_t>(hyperblocks.rows() / k);
  return detail::run_epochs(
      samples, options, adam,
      [&](const std::vector<std::size_t>& ids) {
        const Mat batch = gather_hyperblocks(hyperblocks, ids, k);
        const Mat recon = model.forward_train(batch);
        model.backward(nn::mse_grad(recon, batch));
        return nn::mse_loss(recon, batch);
      },
      [&] { return nn::mse_loss(model.reconstruct(hyperblocks), hyperblocks); });
}

HbaeTrainResult train_hbae(const Mat& hyperblocks, const HbaeConfig& config, const TrainOptions& options,
                           std::uint64_t init_seed) {
  HbaeTrainResult result{HbaeModel(config, init_seed), {}};
  result.log = train_hbae(result.model, hyperblocks, options);
  return result;
}

}  // namespace gcdc
