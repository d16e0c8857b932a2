#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcdc/nn.hpp"

namespace gcdc::nn {

// Byte layout (little-endian):
//   "GCNN" | u32 version | string kind | u32 ndims, u32 dims[ndims] | u64 seed
//   | u32 ntensors, { string name | u32 rows | u32 cols | f32 values[rows*cols] }
//   | u32 nextras, f64 extras[nextras]
// Strings are u32 length + bytes.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string kind;
  std::vector<std::uint32_t> dims;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, Eigen::MatrixXf>> tensors;
  std::vector<double> extras;
};

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

/// Stores parameter values as 32-bit floats, in list order.
void store_parameters(Checkpoint& ckpt, const ParameterList& params);
/// Loads values by position, checking names and shapes.
void load_parameters(const Checkpoint& ckpt, const ParameterList& params);

}  // namespace gcdc::nn
