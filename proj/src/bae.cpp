#include "gcdc/bae.hpp"

#include <cmath>

namespace gcdc {

void BaeConfig::validate() const {
  require(block_dim > 0 && latent_dim > 0 && hidden > 0, Errc::invalid_argument, "BAE dimensions must be positive");
  require(latent_dim < block_dim, Errc::invalid_argument, "BAE latent_dim must be smaller than block_dim");
}

ResidualScale ResidualScale::fit(const Mat& residuals) {
  ResidualScale s;
  if (residuals.size() == 0) return s;
  const auto n = static_cast<double>(residuals.size());
  s.mean = residuals.sum() / n;
  const double var = (residuals.array() - s.mean).square().sum() / n;
  s.std = std::sqrt(var);
  if (!(s.std > 1e-12)) s.std = 1.0;
  return s;
}

BaeModel::BaeModel(const BaeConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
  config.validate();
  Rng rng(seed);
  encoder = nn::FeedForward(config.block_dim, config.hidden, config.latent_dim, rng, "bae.encoder");
  decoder = nn::FeedForward(config.latent_dim, config.hidden, config.block_dim, rng, "bae.decoder");
}

Mat BaeModel::encode(const Mat& x, const Mat& y) const {
  require(x.rows() == y.rows() && x.cols() == y.cols(), Errc::shape_mismatch, "BAE x and y differ in shape");
  require(x.cols() == config_.block_dim, Errc::shape_mismatch, "BAE input width != block_dim");
  return encoder(scale.apply(x - y));
}

Mat BaeModel::decode_residual(const Mat& latents) const {
  require(latents.cols() == config_.latent_dim, Errc::shape_mismatch, "BAE latent width != latent_dim");
  return scale.invert(decoder(latents));
}

Mat BaeModel::decode(const Mat& latents, const Mat& y) const {
  Mat out = decode_residual(latents);
  require(out.rows() == y.rows(), Errc::shape_mismatch, "BAE latent count != block count");
  out += y;
  return out;
}

Mat BaeModel::forward_train(const Mat& normalized_residuals) {
  return decoder.forward(encoder.forward(normalized_residuals));
}

void BaeModel::backward(const Mat& d_out) { encoder.backward(decoder.backward(d_out)); }

nn::ParameterList BaeModel::parameters() {
  nn::ParameterList out;
  encoder.collect(out);
  decoder.collect(out);
  return out;
}

std::size_t BaeModel::parameter_count() const { return nn::parameter_count(const_cast<BaeModel*>(this)->parameters()); }

nn::Checkpoint BaeModel::to_checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.kind = "bae";
  ckpt.dims = {static_cast<std::uint32_t>(config_.block_dim), static_cast<std::uint32_t>(config_.latent_dim),
               static_cast<std::uint32_t>(config_.hidden)};
  ckpt.seed = seed_;
  nn::store_parameters(ckpt, const_cast<BaeModel*>(this)->parameters());
  ckpt.extras = {scale.mean, scale.std};
  return ckpt;
}

BaeModel BaeModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  require(ckpt.kind == "bae", Errc::corrupt_payload, "checkpoint kind '" + ckpt.kind + "' is not bae");
  require(ckpt.dims.size() == 3 && ckpt.extras.size() == 2, Errc::corrupt_payload, "bae checkpoint malformed");
  BaeConfig c{.block_dim = ckpt.dims[0], .latent_dim = ckpt.dims[1], .hidden = ckpt.dims[2]};
  BaeModel model(c, ckpt.seed);
  nn::load_parameters(ckpt, model.parameters());
  model.scale = {ckpt.extras[0], ckpt.extras[1]};
  return model;
}

namespace {

Mat gather_rows(const Mat& data, const std::vector<std::size_t>& ids) {
  Mat out(static_cast<Index>(ids.size()), data.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Index>(i)) = data.row(static_cast<Index>(ids[i]));
  return out;
}

}  // namespace

BaeTrainResult train_bae(const Mat& x, const Mat& y, const BaeConfig& config, const TrainOptions& options,
                         std::uint64_t init_seed) {
  require(x.rows() == y.rows() && x.cols() == y.cols(), Errc::shape_mismatch, "BAE x and y differ in shape");
  BaeTrainResult result{BaeModel(config, init_seed), {}};
  auto& model = result.model;
  const Mat residual = x - y;
  model.scale = ResidualScale::fit(residual);
  const Mat target = model.scale.apply(residual);
  // Normalized-space MSE times std^2 is the MSE of x^R against x.
  const double to_data_units = model.scale.std * model.scale.std;

  nn::Adam adam(model.parameters(), nn::AdamOptions{.lr = options.lr});
  result.log = detail::run_epochs(
      static_cast<std::size_t>(x.rows()), options, adam,
      [&](const std::vector<std::size_t>& ids) {
        const Mat batch = gather_rows(target, ids);
        const Mat out = model.forward_train(batch);
        model.backward(nn::mse_grad(out, batch));
        return nn::mse_loss(out, batch) * to_data_units;
      },
      [&] { return nn::mse_loss(model.decoder(model.encoder(target)), target) * to_data_units; });
  return result;
}

}  // namespace gcdc
