#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gcdc/tensor.hpp"

namespace gcdc {

/// sqrt(||a - b||^2 / n) / (max(a) - min(a)). Throws ZeroRange for constant `a`.
double nrmse(std::span<const float> original, std::span<const float> reconstructed);

/// NRMSE of each slice along `axis`, each normalized by its own range.
std::vector<double> nrmse_per_slice(const Dataset& original, const Dataset& reconstructed, std::size_t axis);

struct Histogram {
  std::vector<double> edges;  // bins + 1 ascending edges
  std::vector<std::size_t> counts;

  std::size_t total() const;
};

/// Histogram of |a - b| / range(a) over [0, upper]; values above `upper` land
/// in the last bin. `upper` defaults to the largest observed relative error.
Histogram relative_point_error_histogram(std::span<const float> original, std::span<const float> reconstructed,
                                         std::size_t bins, std::optional<double> upper = std::nullopt);

/// Largest l2 error over the blocks of a tiling (padding excluded).
double max_block_error(const Dataset& original, const Dataset& reconstructed, const Shape& block_shape);

}  // namespace gcdc
