#include "gcdc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gcdc {

const char* to_string(AxisRole role) {
  switch (role) {
    case AxisRole::variable: return "variable";
    case AxisRole::time: return "time";
    case AxisRole::space: return "space";
  }
  return "space";
}

AxisRole axis_role_from_string(const std::string& s) {
  if (s == "variable") return AxisRole::variable;
  if (s == "time") return AxisRole::time;
  if (s == "space") return AxisRole::space;
  throw Error(Errc::invalid_argument, "unknown axis role '" + s + "'");
}

const char* to_string(NormMode mode) {
  switch (mode) {
    case NormMode::none: return "none";
    case NormMode::zscore: return "zscore";
    case NormMode::mean0range1: return "mean0range1";
  }
  return "none";
}

NormMode norm_mode_from_string(const std::string& s) {
  if (s == "none") return NormMode::none;
  if (s == "zscore") return NormMode::zscore;
  if (s == "mean0range1") return NormMode::mean0range1;
  throw Error(Errc::invalid_argument, "unknown normalization mode '" + s + "'");
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Shape row_major_strides(const Shape& shape) {
  Shape strides(shape.size(), 1);
  for (std::size_t d = shape.size(); d-- > 1;) strides[d - 1] = strides[d] * shape[d];
  return strides;
}

void Dataset::validate() const {
  require(!shape.empty(), Errc::invalid_argument, "dataset has rank 0");
  for (auto n : shape) require(n > 0, Errc::invalid_argument, "dataset axis of length 0");
  require(element_count(shape) == values.size(), Errc::shape_mismatch,
          "product(shape) != number of values");
  require(roles.size() == shape.size(), Errc::rank_mismatch, "axis roles do not match rank");
  for (std::size_t i = 0; i < values.size(); ++i)
    require(std::isfinite(values[i]), Errc::non_finite,
            "non-finite value at flat index " + std::to_string(i));
}

void BlockSpec::validate_for(const Shape& shape) const {
  require(block_shape.size() == shape.size(), Errc::rank_mismatch,
          "block rank " + std::to_string(block_shape.size()) + " != dataset rank " +
              std::to_string(shape.size()));
  for (std::size_t d = 0; d < shape.size(); ++d) {
    require(block_shape[d] >= 1, Errc::invalid_spec, "block axis of length 0");
    require(block_shape[d] <= shape[d], Errc::invalid_spec,
            "block axis " + std::to_string(d) + " longer than dataset axis");
  }
  require(hyper_k >= 1, Errc::invalid_spec, "hyper_k must be >= 1");
  require(hyper_axis < shape.size(), Errc::invalid_spec, "hyper_axis out of range");
}

Shape block_grid(const Shape& shape, const Shape& block_shape) {
  require(shape.size() == block_shape.size(), Errc::rank_mismatch, "block rank mismatch");
  Shape grid(shape.size());
  for (std::size_t d = 0; d < shape.size(); ++d)
    grid[d] = (shape[d] + block_shape[d] - 1) / block_shape[d];
  return grid;
}

std::size_t block_count(const Shape& shape, const Shape& block_shape) {
  return element_count(block_grid(shape, block_shape));
}

namespace {

Shape unravel(std::size_t flat, const Shape& dims) {
  Shape idx(dims.size());
  for (std::size_t d = dims.size(); d-- > 0;) {
    idx[d] = flat % dims[d];
    flat /= dims[d];
  }
  return idx;
}

// Calls fn(data_offset, block_offset, length) for every in-bounds run of a
// block along the last axis.
template <typename Fn>
void for_each_run(const Shape& shape, const Shape& block_shape, const Shape& origin, Fn&& fn) {
  const std::size_t rank = shape.size();
  const Shape data_strides = row_major_strides(shape);
  const Shape block_strides = row_major_strides(block_shape);
  const std::size_t last = rank - 1;
  const std::size_t run = std::min(block_shape[last], shape[last] - origin[last]);

  Shape lead(block_shape.begin(), block_shape.end() - 1);
  const std::size_t runs = element_count(lead);
  for (std::size_t r = 0; r < runs; ++r) {
    const Shape local = unravel(r, lead);
    bool inside = true;
    std::size_t data_off = origin[last];
    std::size_t block_off = 0;
    for (std::size_t d = 0; d < last; ++d) {
      const std::size_t coord = origin[d] + local[d];
      if (coord >= shape[d]) {
        inside = false;
        break;
      }
      data_off += coord * data_strides[d];
      block_off += local[d] * block_strides[d];
    }
    if (inside) fn(data_off, block_off, run);
  }
}

}  // namespace

template <typename Scalar>
Shape BlockSet<Scalar>::grid_index(std::size_t i) const {
  return unravel(i, grid);
}

template <typename Scalar>
Shape BlockSet<Scalar>::origin(std::size_t i) const {
  Shape idx = grid_index(i);
  for (std::size_t d = 0; d < idx.size(); ++d) idx[d] *= block_shape[d];
  return idx;
}

template <typename Scalar>
Shape BlockSet<Scalar>::valid_extent(std::size_t i) const {
  Shape o = origin(i);
  Shape ext(o.size());
  for (std::size_t d = 0; d < o.size(); ++d)
    ext[d] = std::min(block_shape[d], data_shape[d] - o[d]);
  return ext;
}

template <typename Scalar>
std::vector<bool> BlockSet<Scalar>::valid_mask(std::size_t i) const {
  std::vector<bool> mask(block_dim(), false);
  for_each_run(data_shape, block_shape, origin(i), [&](std::size_t, std::size_t off, std::size_t len) {
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(off), len, true);
  });
  return mask;
}

template <typename Scalar>
BlockSet<Scalar> partition(const Shape& shape, std::span<const Scalar> values, const Shape& block_shape) {
  require(block_shape.size() == shape.size(), Errc::rank_mismatch,
          "block rank " + std::to_string(block_shape.size()) + " != dataset rank " +
              std::to_string(shape.size()));
  require(element_count(shape) == values.size(), Errc::shape_mismatch, "value count does not match shape");
  for (std::size_t d = 0; d < shape.size(); ++d)
    require(block_shape[d] >= 1 && block_shape[d] <= shape[d], Errc::invalid_spec,
            "block axis " + std::to_string(d) + " invalid for dataset");

  BlockSet<Scalar> set;
  set.data_shape = shape;
  set.block_shape = block_shape;
  set.grid = block_grid(shape, block_shape);
  const auto n = static_cast<Eigen::Index>(element_count(set.grid));
  const auto dim = static_cast<Eigen::Index>(element_count(block_shape));
  set.rows = BlockSet<Scalar>::Rows::Zero(n, dim);
  for (Eigen::Index b = 0; b < n; ++b) {
    Scalar* dst = set.rows.row(b).data();
    for_each_run(shape, block_shape, set.origin(static_cast<std::size_t>(b)),
                 [&](std::size_t src_off, std::size_t dst_off, std::size_t len) {
                   std::copy_n(values.data() + src_off, len, dst + dst_off);
                 });
  }
  return set;
}

template <typename Scalar>
std::vector<Scalar> reassemble(const BlockSet<Scalar>& blocks) {
  const std::size_t expected = element_count(blocks.grid);
  require(blocks.count() == expected, Errc::missing_block,
          "have " + std::to_string(blocks.count()) + " blocks, grid needs " + std::to_string(expected));
  require(blocks.block_dim() == element_count(blocks.block_shape), Errc::shape_mismatch,
          "block row length does not match block shape");
  std::vector<Scalar> out(element_count(blocks.data_shape));
  for (std::size_t b = 0; b < expected; ++b) {
    const Scalar* src = blocks.rows.row(static_cast<Eigen::Index>(b)).data();
    for_each_run(blocks.data_shape, blocks.block_shape, blocks.origin(b),
                 [&](std::size_t dst_off, std::size_t src_off, std::size_t len) {
                   std::copy_n(src + src_off, len, out.data() + dst_off);
                 });
  }
  return out;
}

template struct BlockSet<float>;
template struct BlockSet<double>;
template BlockSet<float> partition<float>(const Shape&, std::span<const float>, const Shape&);
template BlockSet<double> partition<double>(const Shape&, std::span<const double>, const Shape&);
template std::vector<float> reassemble<float>(const BlockSet<float>&);
template std::vector<double> reassemble<double>(const BlockSet<double>&);

BlockSet<float> partition(const Dataset& ds, const BlockSpec& spec) {
  spec.validate_for(ds.shape);
  return partition<float>(ds.shape, std::span<const float>(ds.values), spec.block_shape);
}

std::vector<HyperBlock> group_hyper(const Shape& grid, const BlockSpec& spec) {
  require(spec.hyper_k >= 1, Errc::invalid_spec, "hyper_k must be >= 1");
  require(spec.hyper_axis < grid.size(), Errc::invalid_spec, "hyper_axis out of range");
  const Shape strides = row_major_strides(grid);
  const std::size_t axis = spec.hyper_axis;
  const std::size_t line_len = grid[axis];

  Shape others = grid;
  others[axis] = 1;
  const std::size_t lines = element_count(others);

  std::vector<HyperBlock> out;
  out.reserve(lines * ((line_len + spec.hyper_k - 1) / spec.hyper_k));
  for (std::size_t l = 0; l < lines; ++l) {
    const Shape start = unravel(l, others);
    std::size_t base = 0;
    for (std::size_t d = 0; d < grid.size(); ++d) base += start[d] * strides[d];
    for (std::size_t t = 0; t < line_len; t += spec.hyper_k) {
      HyperBlock hb;
      hb.block_ids.reserve(spec.hyper_k);
      const std::size_t real = std::min(spec.hyper_k, line_len - t);
      for (std::size_t j = 0; j < real; ++j) hb.block_ids.push_back(base + (t + j) * strides[axis]);
      hb.pad = spec.hyper_k - real;
      for (std::size_t j = 0; j < hb.pad; ++j) hb.block_ids.push_back(hb.block_ids[real - 1]);
      out.push_back(std::move(hb));
    }
  }
  // Lines interleave along the hyper axis; order by first block id.
  std::stable_sort(out.begin(), out.end(), [](const HyperBlock& a, const HyperBlock& b) {
    return a.block_ids.front() < b.block_ids.front();
  });
  return out;
}

std::size_t Normalization::group_of(const Shape& strides, const Shape& shape, std::size_t flat) const {
  if (!group_axis) return 0;
  return (flat / strides[*group_axis]) % shape[*group_axis];
}

std::pair<Dataset, Normalization> normalize(const Dataset& ds, NormMode mode,
                                            std::optional<std::size_t> group_axis) {
  ds.validate();
  if (group_axis) require(*group_axis < ds.rank(), Errc::invalid_argument, "group_axis out of range");

  Normalization norm;
  norm.mode = mode;
  norm.group_axis = group_axis;
  const std::size_t groups = group_axis ? ds.shape[*group_axis] : 1;
  norm.groups.assign(groups, NormStats{});

  Dataset out = ds;
  if (mode == NormMode::none) return {out, norm};

  const Shape strides = row_major_strides(ds.shape);
  std::vector<double> sum(groups, 0.0), lo(groups, INFINITY), hi(groups, -INFINITY);
  std::vector<std::size_t> count(groups, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t g = norm.group_of(strides, ds.shape, i);
    const double v = ds.values[i];
    sum[g] += v;
    lo[g] = std::min(lo[g], v);
    hi[g] = std::max(hi[g], v);
    ++count[g];
  }
  for (std::size_t g = 0; g < groups; ++g) norm.groups[g].mean = sum[g] / static_cast<double>(count[g]);

  if (mode == NormMode::zscore) {
    std::vector<double> sq(groups, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::size_t g = norm.group_of(strides, ds.shape, i);
      const double d = ds.values[i] - norm.groups[g].mean;
      sq[g] += d * d;
    }
    for (std::size_t g = 0; g < groups; ++g) norm.groups[g].scale = std::sqrt(sq[g] / static_cast<double>(count[g]));
  } else {
    for (std::size_t g = 0; g < groups; ++g) norm.groups[g].scale = hi[g] - lo[g];
  }
  for (auto& s : norm.groups) {
    if (!(s.scale > 0.0)) {
      s.scale = 1.0;
      s.constant = true;
    }
  }

  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = norm.groups[norm.group_of(strides, ds.shape, i)];
    out.values[i] = static_cast<float>((static_cast<double>(ds.values[i]) - s.mean) / s.scale);
  }
  return {out, norm};
}

Dataset denormalize(const Dataset& normalized, const Normalization& norm) {
  Dataset out = normalized;
  if (norm.mode == NormMode::none) return out;
  const Shape strides = row_major_strides(normalized.shape);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& s = norm.groups[norm.group_of(strides, normalized.shape, i)];
    out.values[i] = static_cast<float>(static_cast<double>(normalized.values[i]) * s.scale + s.mean);
  }
  return out;
}

Dataset reassemble(const BlockSet<float>& blocks, const std::vector<AxisRole>& roles, const Normalization& norm) {
  Dataset ds;
  ds.shape = blocks.data_shape;
  ds.roles = roles;
  ds.values = reassemble(blocks);
  return denormalize(ds, norm);
}

}  // namespace gcdc
