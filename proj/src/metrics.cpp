#include "gcdc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gcdc {

namespace {

double value_range(std::span<const float> values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return static_cast<double>(*hi) - static_cast<double>(*lo);
}

void check_pair(std::span<const float> a, std::span<const float> b) {
  require(a.size() == b.size(), Errc::shape_mismatch, "datasets differ in size");
  require(!a.empty(), Errc::invalid_argument, "empty dataset");
}

}  // namespace

double nrmse(std::span<const float> original, std::span<const float> reconstructed) {
  check_pair(original, reconstructed);
  const double range = value_range(original);
  require(range > 0.0, Errc::zero_range, "original data has zero range");
  double sq = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const double d = static_cast<double>(original[i]) - static_cast<double>(reconstructed[i]);
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(original.size())) / range;
}

std::vector<double> nrmse_per_slice(const Dataset& original, const Dataset& reconstructed, std::size_t axis) {
  require(original.shape == reconstructed.shape, Errc::shape_mismatch, "datasets differ in shape");
  require(axis < original.rank(), Errc::invalid_argument, "axis out of range");
  const Shape strides = row_major_strides(original.shape);
  const std::size_t n = original.shape[axis];
  std::vector<std::vector<float>> a(n), b(n);
  for (std::size_t i = 0; i < original.size(); ++i) {
    const std::size_t s = (i / strides[axis]) % n;
    a[s].push_back(original.values[i]);
    b[s].push_back(reconstructed.values[i]);
  }
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) out.push_back(nrmse(a[s], b[s]));
  return out;
}

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

Histogram relative_point_error_histogram(std::span<const float> original, std::span<const float> reconstructed,
                                         std::size_t bins, std::optional<double> upper) {
  check_pair(original, reconstructed);
  require(bins >= 1, Errc::invalid_argument, "histogram needs at least one bin");
  const double range = value_range(original);
  require(range > 0.0, Errc::zero_range, "original data has zero range");

  std::vector<double> rel(original.size());
  for (std::size_t i = 0; i < original.size(); ++i)
    rel[i] = std::fabs(static_cast<double>(original[i]) - static_cast<double>(reconstructed[i])) / range;
  double top = upper.value_or(*std::max_element(rel.begin(), rel.end()));
  if (!(top > 0.0)) top = 1.0;

  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = top * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double r : rel) {
    auto bin = static_cast<std::size_t>(r / top * static_cast<double>(bins));
    ++h.counts[std::min(bin, bins - 1)];
  }
  return h;
}

double max_block_error(const Dataset& original, const Dataset& reconstructed, const Shape& block_shape) {
  require(original.shape == reconstructed.shape, Errc::shape_mismatch, "datasets differ in shape");
  const auto a = partition<float>(original.shape, std::span<const float>(original.values), block_shape);
  const auto b = partition<float>(reconstructed.shape, std::span<const float>(reconstructed.values), block_shape);
  return (a.rows.cast<double>() - b.rows.cast<double>()).rowwise().norm().maxCoeff();
}

}  // namespace gcdc
