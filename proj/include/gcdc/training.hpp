#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "gcdc/error.hpp"
#include "gcdc/nn.hpp"
#include "gcdc/random.hpp"

namespace gcdc {

struct TrainOptions {
  int epochs = 100;
  nn::Index batch = 8;  // samples per Adam step
  double lr = 1e-3;
  std::uint64_t seed = 0;  // batch shuffling
  std::function<void(int epoch, double loss)> on_epoch;
};

struct TrainLog {
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;  // mean training loss per epoch
};

namespace detail {

/// Shuffled mini-batch loop. step(ids) runs forward/backward for the batch and
/// returns its mean loss; evaluate() returns the full-data loss.
template <typename Step, typename Evaluate>
TrainLog run_epochs(std::size_t samples, const TrainOptions& opt, nn::Adam& adam, Step&& step, Evaluate&& evaluate) {
  require(samples >= 1, Errc::invalid_argument, "training needs at least one sample");
  require(opt.batch >= 1, Errc::invalid_argument, "batch size must be >= 1");
  TrainLog log;
  log.initial_loss = evaluate();
  Rng rng(opt.seed);
  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t b = 0; b < samples; b += static_cast<std::size_t>(opt.batch)) {
      const std::size_t end = std::min(samples, b + static_cast<std::size_t>(opt.batch));
      std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(b),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      adam.zero_grad();
      const double loss = step(ids);
      if (!std::isfinite(loss))
        throw Error(Errc::diverged, "loss became non-finite at epoch " + std::to_string(epoch));
      adam.step();
      total += loss * static_cast<double>(ids.size());
    }
    const double mean = total / static_cast<double>(samples);
    log.epoch_losses.push_back(mean);
    if (opt.on_epoch) opt.on_epoch(epoch, mean);
  }
  return log;
}

}  // namespace detail
}  // namespace gcdc
