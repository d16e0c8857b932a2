#pragma once

// Analytic-vs-central-difference gradient checks for small composites. Each
// check builds a seeded model, runs forward/backward once for the analytic
// gradient, then perturbs every parameter (and the input) entry by +-h and
// +-h/2 and re-evaluates the loss through the inference path.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gcdc/bae.hpp"
#include "gcdc/hbae.hpp"
#include "gcdc/nn.hpp"
#include "gcdc/random.hpp"

namespace gradcheck {

using gcdc::nn::Index;
using gcdc::nn::Mat;

struct Result {
  double max_rel = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // entries whose +-h step flips a ReLU mask
  std::size_t parameters = 0;

  void merge(const Result& o) {
    max_rel = std::max(max_rel, o.max_rel);
    checked += o.checked;
    skipped += o.skipped;
    parameters = std::max(parameters, o.parameters);
  }
};

/// |a - n| / max(|a|, |n|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), floor});
}

using Signature = std::function<std::vector<bool>()>;

/// Numeric derivative by Richardson-extrapolated central differences,
/// (4 D(h/2) - D(h)) / 3, which cancels the h^2 truncation term. A plain
/// central difference needs a tiny h for accuracy, and then round-off in the
/// loss swamps gradients near the relative-error floor.
inline void check_entries(Mat& value, const Mat& analytic, const std::function<double()>& loss,
                          const Signature& signature, Result& out, double h = 1e-4) {
  const auto base = signature ? signature() : std::vector<bool>{};
  for (Index i = 0; i < value.rows(); ++i)
    for (Index j = 0; j < value.cols(); ++j) {
      const double saved = value(i, j);
      bool flipped = false;
      auto at = [&](double step) {
        value(i, j) = saved + step;
        const double l = loss();
        flipped = flipped || (signature && signature() != base);
        return l;
      };
      const double wide = (at(h) - at(-h)) / (2.0 * h);
      const double narrow = (at(h / 2) - at(-h / 2)) / h;
      value(i, j) = saved;
      if (flipped) {
        ++out.skipped;
        continue;
      }
      out.max_rel = std::max(out.max_rel, relative_error(analytic(i, j), (4.0 * narrow - wide) / 3.0));
      ++out.checked;
    }
}

inline Mat random_mat(Index r, Index c, gcdc::Rng& rng) {
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

inline std::vector<bool> positive(const Mat& m) {
  std::vector<bool> out(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.size(); ++i) out[static_cast<std::size_t>(i)] = m.data()[i] > 0.0;
  return out;
}

template <typename Forward>
void check_all(gcdc::nn::ParameterList params, Mat& x, const Mat& dx, Forward&& loss, const Signature& sig,
               Result& out) {
  out.parameters = gcdc::nn::parameter_count(params);
  for (auto* p : params) check_entries(p->value, p->grad, loss, sig, out);
  check_entries(x, dx, loss, sig, out);
}

/// Linear -> MSE.
inline Result linear(std::uint64_t seed) {
  gcdc::Rng rng(seed);
  gcdc::nn::Linear layer(5, 4, rng, "l");
  Mat x = random_mat(3, 5, rng), t = random_mat(3, 4, rng);
  gcdc::nn::ParameterList params;
  layer.collect(params);
  const Mat dx = layer.backward(gcdc::nn::mse_grad(layer.forward(x), t));
  Result r;
  check_all(params, x, dx, [&] { return gcdc::nn::mse_loss(layer(x), t); }, {}, r);
  return r;
}

/// Linear -> ReLU -> Linear -> MSE.
inline Result relu_mlp(std::uint64_t seed) {
  gcdc::Rng rng(seed);
  gcdc::nn::FeedForward ff(6, 8, 3, rng, "ff");
  Mat x = random_mat(4, 6, rng), t = random_mat(4, 3, rng);
  gcdc::nn::ParameterList params;
  ff.collect(params);
  const Mat dx = ff.backward(gcdc::nn::mse_grad(ff.forward(x), t));
  Result r;
  check_all(params, x, dx, [&] { return gcdc::nn::mse_loss(ff(x), t); }, [&] { return positive(ff.first(x)); }, r);
  return r;
}

/// LayerNorm (non-trivial gamma/beta) -> Linear -> MSE.
inline Result layer_norm(std::uint64_t seed) {
  gcdc::Rng rng(seed);
  gcdc::nn::LayerNorm norm(6, "ln");
  norm.gamma.value = random_mat(1, 6, rng);
  norm.beta.value = random_mat(1, 6, rng);
  gcdc::nn::Linear head(6, 3, rng, "head");
  Mat x = random_mat(4, 6, rng), t = random_mat(4, 3, rng);
  gcdc::nn::ParameterList params;
  norm.collect(params);
  head.collect(params);
  const Mat dx = norm.backward(head.backward(gcdc::nn::mse_grad(head.forward(norm.forward(x)), t)));
  Result r;
  check_all(params, x, dx, [&] { return gcdc::nn::mse_loss(head(norm(x)), t); }, {}, r);
  return r;
}

/// Self-attention over two sequences of length 3 -> MSE.
inline Result attention(std::uint64_t seed) {
  gcdc::Rng rng(seed);
  gcdc::nn::SelfAttention attn(6, 3, 5, rng, "attn");
  Mat x = random_mat(6, 6, rng), t = random_mat(6, 5, rng);
  gcdc::nn::ParameterList params;
  attn.collect(params);
  const Mat dx = attn.backward(gcdc::nn::mse_grad(attn.forward(x, 3), t));
  Result r;
  check_all(params, x, dx, [&] { return gcdc::nn::mse_loss(attn(x, 3), t); }, {}, r);
  return r;
}

/// A small full hyper-block autoencoder (embedding, LayerNorm, attention,
/// bottleneck) under reconstruction MSE.
inline Result hbae(std::uint64_t seed) {
  gcdc::HbaeConfig c{.block_dim = 6, .hyper_k = 2, .embed_dim = 4, .hidden = 5, .latent_dim = 3};
  gcdc::HbaeModel model(c, seed);
  gcdc::Rng rng(seed ^ 0x5eedULL);
  for (auto* p : model.parameters())
    if (p->name.find("gamma") != std::string::npos || p->name.find("beta") != std::string::npos)
      p->value = random_mat(p->value.rows(), p->value.cols(), rng);
  Mat x = random_mat(4, 6, rng);
  const Mat target = x;
  auto params = model.parameters();
  for (auto* p : params) p->zero_grad();
  model.backward(gcdc::nn::mse_grad(model.forward_train(x), target));
  auto sig = [&] {
    auto m1 = positive(model.embed_encoder.first(x));
    const Mat e = model.mix(model.embed(x), false);
    Mat f = gcdc::unflatten_groups(model.from_latent(model.to_latent(gcdc::flatten_groups(e, 2))), 2);
    f = model.mix(f, true);
    const auto m2 = positive(model.embed_decoder.first(f));
    m1.insert(m1.end(), m2.begin(), m2.end());
    return m1;
  };
  Result r;
  r.parameters = gcdc::nn::parameter_count(params);
  for (auto* p : params) check_entries(p->value, p->grad, [&] { return gcdc::nn::mse_loss(model.reconstruct(x), target); }, sig, r);
  return r;
}

/// Residual autoencoder on normalized residuals under MSE.
inline Result bae(std::uint64_t seed) {
  gcdc::BaeConfig c{.block_dim = 8, .latent_dim = 3, .hidden = 6};
  gcdc::BaeModel model(c, seed);
  gcdc::Rng rng(seed ^ 0xbaeULL);
  Mat x = random_mat(5, 8, rng);
  auto params = model.parameters();
  for (auto* p : params) p->zero_grad();
  model.backward(gcdc::nn::mse_grad(model.forward_train(x), x));
  auto sig = [&] {
    auto m1 = positive(model.encoder.first(x));
    const auto m2 = positive(model.decoder.first(model.encoder(x)));
    m1.insert(m1.end(), m2.begin(), m2.end());
    return m1;
  };
  Result r;
  r.parameters = gcdc::nn::parameter_count(params);
  for (auto* p : params)
    check_entries(p->value, p->grad, [&] { return gcdc::nn::mse_loss(model.decoder(model.encoder(x)), x); }, sig, r);
  return r;
}

}  // namespace gradcheck
