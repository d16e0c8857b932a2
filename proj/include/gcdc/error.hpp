#pragma once

#include <stdexcept>
#include <string>

namespace gcdc {

enum class Errc {
  invalid_argument,
  rank_mismatch,
  invalid_spec,
  missing_block,
  shape_mismatch,
  non_finite,
  diverged,
  numerical_failure,
  bin_too_coarse,
  overflow,
  corrupt_stream,
  length_overflow,
  corrupt_payload,
  version_mismatch,
  truncated_file,
  checksum_fail,
  zero_range,
  guarantee_violated,
  io,
};

constexpr const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::rank_mismatch: return "RankMismatch";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::missing_block: return "MissingBlock";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::non_finite: return "NonFinite";
    case Errc::diverged: return "Diverged";
    case Errc::numerical_failure: return "NumericalFailure";
    case Errc::bin_too_coarse: return "BinTooCoarse";
    case Errc::overflow: return "Overflow";
    case Errc::corrupt_stream: return "CorruptStream";
    case Errc::length_overflow: return "LengthOverflow";
    case Errc::corrupt_payload: return "CorruptPayload";
    case Errc::version_mismatch: return "VersionMismatch";
    case Errc::truncated_file: return "TruncatedFile";
    case Errc::checksum_fail: return "ChecksumFail";
    case Errc::zero_range: return "ZeroRange";
    case Errc::guarantee_violated: return "GuaranteeViolated";
    case Errc::io: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace gcdc
