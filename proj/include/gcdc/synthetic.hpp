#pragma once

#include <cstdint>
#include <string>

#include "gcdc/tensor.hpp"

namespace gcdc {

enum class SyntheticKind {
  smooth,     // sums of low-frequency sinusoids drifting in time
  multivar,   // axis 0 = variables: affine copies of one smooth field plus small detail and noise
  histogram,  // nonnegative Gaussian bumps, XGC-like velocity histograms
};

const char* to_string(SyntheticKind kind);
SyntheticKind synthetic_kind_from_string(const std::string& s);

/// Deterministic for a given (kind, shape, seed). Axis roles: multivar is
/// variable, time, space...; the others are time, space... when rank >= 3,
/// else all space.
Dataset generate_synthetic(SyntheticKind kind, const Shape& shape, std::uint64_t seed);

}  // namespace gcdc
