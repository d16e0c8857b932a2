#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcdc/error.hpp"

namespace gcdc {

using Shape = std::vector<std::size_t>;

enum class AxisRole { variable, time, space };

const char* to_string(AxisRole role);
AxisRole axis_role_from_string(const std::string& s);

std::size_t element_count(const Shape& shape);

/// Row-major strides (in elements) for a shape.
Shape row_major_strides(const Shape& shape);

/// An n-dimensional array of 32-bit floats with per-axis roles.
struct Dataset {
  Shape shape;
  std::vector<AxisRole> roles;
  std::vector<float> values;

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }

  /// Throws unless product(shape) == values.size(), roles match rank and
  /// every value is finite.
  void validate() const;
};

/// Block tiling of a dataset plus the hyper-block grouping rule.
struct BlockSpec {
  Shape block_shape;
  std::size_t hyper_k = 1;
  std::size_t hyper_axis = 0;

  std::size_t block_dim() const { return element_count(block_shape); }
  void validate_for(const Shape& shape) const;
};

/// Blocks are stored as the rows of one matrix, in lexicographic order of
/// their origin on the block grid. Edge blocks are zero padded.
template <typename Scalar>
struct BlockSet {
  using Rows = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Shape data_shape;
  Shape block_shape;
  Shape grid;  // blocks per axis, ceil(shape / block_shape)
  Rows rows;

  std::size_t count() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t block_dim() const { return static_cast<std::size_t>(rows.cols()); }

  /// Block-grid multi-index of block i.
  Shape grid_index(std::size_t i) const;
  /// Element coordinate of the first entry of block i.
  Shape origin(std::size_t i) const;
  /// Per-axis count of in-bounds entries of block i (block_shape unless at an edge).
  Shape valid_extent(std::size_t i) const;
  /// True where the flattened entry of block i lies inside the dataset.
  std::vector<bool> valid_mask(std::size_t i) const;
};

/// Number of blocks: prod ceil(shape[d] / block_shape[d]).
std::size_t block_count(const Shape& shape, const Shape& block_shape);
Shape block_grid(const Shape& shape, const Shape& block_shape);

template <typename Scalar>
BlockSet<Scalar> partition(const Shape& shape, std::span<const Scalar> values, const Shape& block_shape);

/// Inverse of partition: strips padding. Throws MissingBlock if the set does
/// not hold every block of the grid.
template <typename Scalar>
std::vector<Scalar> reassemble(const BlockSet<Scalar>& blocks);

BlockSet<float> partition(const Dataset& ds, const BlockSpec& spec);

/// k block ids (with repeats for padding) compressed jointly.
struct HyperBlock {
  std::vector<std::size_t> block_ids;
  std::size_t pad = 0;  // trailing repeats of the last real block
};

/// Groups consecutive runs of spec.hyper_k blocks along spec.hyper_axis.
/// Hyper-blocks are ordered by the lexicographic position of their first block.
std::vector<HyperBlock> group_hyper(const Shape& grid, const BlockSpec& spec);

enum class NormMode { none, zscore, mean0range1 };

const char* to_string(NormMode mode);
NormMode norm_mode_from_string(const std::string& s);

struct NormStats {
  double mean = 0.0;
  double scale = 1.0;
  bool constant = false;  // zero range / std: scale forced to 1
};

struct Normalization {
  NormMode mode = NormMode::none;
  std::optional<std::size_t> group_axis;
  std::vector<NormStats> groups;  // one entry, or one per index along group_axis

  std::size_t group_of(const Shape& strides, const Shape& shape, std::size_t flat) const;
};

/// Normalizes per group (or globally). Output values are 32-bit.
std::pair<Dataset, Normalization> normalize(const Dataset& ds, NormMode mode,
                                            std::optional<std::size_t> group_axis = std::nullopt);

/// Maps normalized values back to the original domain, rounding to 32-bit.
Dataset denormalize(const Dataset& normalized, const Normalization& norm);

/// Full inverse of the block path: reassemble then denormalize.
Dataset reassemble(const BlockSet<float>& blocks, const std::vector<AxisRole>& roles,
                   const Normalization& norm);

}  // namespace gcdc
