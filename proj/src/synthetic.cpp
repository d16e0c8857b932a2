#include "gcdc/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "gcdc/random.hpp"

namespace gcdc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Sum of `terms` sinusoids over normalized coordinates; frequencies are a
/// few cycles per extent, amplitudes decay as 1/(m+1).
std::vector<double> sinusoid_field(const Shape& shape, Rng& rng, int terms, double max_cycles) {
  const std::size_t rank = shape.size();
  std::vector<std::vector<double>> freq(terms, std::vector<double>(rank));
  std::vector<double> phase(terms), amp(terms);
  for (int m = 0; m < terms; ++m) {
    for (auto& f : freq[m]) f = rng.uniform(-max_cycles, max_cycles);
    phase[m] = rng.uniform(0.0, kTwoPi);
    amp[m] = 1.0 / (m + 1);
  }
  const std::size_t n = element_count(shape);
  std::vector<double> out(n, 0.0);
  Shape idx(rank, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (int m = 0; m < terms; ++m) {
      double arg = phase[m];
      for (std::size_t d = 0; d < rank; ++d) arg += kTwoPi * freq[m][d] * static_cast<double>(idx[d]) / shape[d];
      v += amp[m] * std::sin(arg);
    }
    out[i] = v;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
  return out;
}

std::vector<AxisRole> default_roles(std::size_t rank, bool leading_variable) {
  std::vector<AxisRole> roles(rank, AxisRole::space);
  std::size_t next = 0;
  if (leading_variable && rank >= 1) roles[next++] = AxisRole::variable;
  if (rank - next >= 3) roles[next] = AxisRole::time;
  return roles;
}

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

Dataset make_smooth(const Shape& shape, Rng& rng) {
  return {shape, default_roles(shape.size(), false), to_float(sinusoid_field(shape, rng, 6, 1.5))};
}

Dataset make_multivar(const Shape& shape, Rng& rng) {
  require(shape.size() >= 2, Errc::invalid_argument, "multivar data needs a variable axis and at least one more");
  const Shape inner(shape.begin() + 1, shape.end());
  const std::size_t per_var = element_count(inner);
  const auto base = sinusoid_field(inner, rng, 6, 1.5);
  std::vector<float> values;
  values.reserve(element_count(shape));
  for (std::size_t v = 0; v < shape[0]; ++v) {
    const double gain = rng.uniform(0.5, 3.0);
    const double offset = rng.uniform(-2.0, 2.0);
    const auto detail = sinusoid_field(inner, rng, 3, 3.0);
    for (std::size_t i = 0; i < per_var; ++i)
      values.push_back(static_cast<float>(gain * (base[i] + 0.1 * detail[i] + 0.002 * rng.normal()) + offset));
  }
  return {shape, default_roles(shape.size(), true), std::move(values)};
}

Dataset make_histogram(const Shape& shape, Rng& rng) {
  // The last two axes are a velocity grid; leading axes index histograms
  // whose bumps drift smoothly.
  const std::size_t rank = shape.size();
  const std::size_t grid_axes = std::min<std::size_t>(rank, 2);
  const Shape lead(shape.begin(), shape.end() - static_cast<std::ptrdiff_t>(grid_axes));
  const Shape grid(shape.end() - static_cast<std::ptrdiff_t>(grid_axes), shape.end());
  const std::size_t n_lead = element_count(lead), n_grid = element_count(grid);

  struct Bump {
    double amp, width, cx, cy, drift, rate;
  };
  std::vector<Bump> bumps(4);
  for (auto& b : bumps)
    b = {rng.uniform(0.5, 2.0), rng.uniform(0.08, 0.2), rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75),
         rng.uniform(0.02, 0.1), rng.uniform(0.5, 2.0)};

  std::vector<float> values(element_count(shape));
  for (std::size_t l = 0; l < n_lead; ++l) {
    const double t = n_lead > 1 ? static_cast<double>(l) / static_cast<double>(n_lead) : 0.0;
    for (std::size_t g = 0; g < n_grid; ++g) {
      const double x = grid_axes == 2 ? (g / grid[1] + 0.5) / grid[0] : (g + 0.5) / grid[0];
      const double y = grid_axes == 2 ? (g % grid[1] + 0.5) / grid[1] : 0.5;
      double v = 0.0;
      for (const auto& b : bumps) {
        const double cx = b.cx + b.drift * std::sin(kTwoPi * b.rate * t);
        const double cy = b.cy + b.drift * std::cos(kTwoPi * b.rate * t);
        v += b.amp * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2.0 * b.width * b.width));
      }
      values[l * n_grid + g] = static_cast<float>(v);
    }
  }
  return {shape, default_roles(rank, false), std::move(values)};
}

}  // namespace

const char* to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::smooth: return "smooth";
    case SyntheticKind::multivar: return "multivar";
    case SyntheticKind::histogram: return "histogram";
  }
  return "smooth";
}

SyntheticKind synthetic_kind_from_string(const std::string& s) {
  if (s == "smooth") return SyntheticKind::smooth;
  if (s == "multivar") return SyntheticKind::multivar;
  if (s == "histogram") return SyntheticKind::histogram;
  throw Error(Errc::invalid_argument, "unknown synthetic kind '" + s + "'");
}

Dataset generate_synthetic(SyntheticKind kind, const Shape& shape, std::uint64_t seed) {
  require(!shape.empty() && element_count(shape) > 0, Errc::invalid_argument, "synthetic shape must be non-empty");
  Rng rng(seed);
  Dataset ds;
  switch (kind) {
    case SyntheticKind::smooth: ds = make_smooth(shape, rng); break;
    case SyntheticKind::multivar: ds = make_multivar(shape, rng); break;
    case SyntheticKind::histogram: ds = make_histogram(shape, rng); break;
  }
  ds.validate();
  return ds;
}

}  // namespace gcdc
