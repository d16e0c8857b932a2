#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "gcdc/error.hpp"
#include "gcdc/parallel.hpp"
#include "gcdc/pca.hpp"

namespace gcdc {

/// Per-block correction: basis indices (ascending) and their quantized
/// coefficients (integer multiples of the bin).
struct CorrectionRecord {
  std::size_t block_id = 0;
  std::vector<std::uint32_t> indices;
  std::vector<std::int64_t> symbols;

  bool empty() const { return indices.empty(); }
};

struct GuaranteeReport {
  double tau = 0.0;
  std::vector<double> block_errors;  // final l2 error per block
  std::size_t corrected_blocks = 0;
  std::size_t total_coefficients = 0;

  double max_error() const {
    return block_errors.empty() ? 0.0 : *std::max_element(block_errors.begin(), block_errors.end());
  }
};

/// Rounds through the storage type, e.g. float for 32-bit archives.
template <typename Storage, typename Derived>
Eigen::VectorXd round_to(const Eigen::MatrixBase<Derived>& v) {
  return v.template cast<Storage>().template cast<double>();
}

/// x^G = x^R + sum_j U[:, idx_j] * (sym_j * bin), summed in ascending index
/// order, then rounded through Storage. Encoder and decoder share this path,
/// so both produce identical bits.
template <typename Storage>
Eigen::VectorXd apply_correction(const Eigen::VectorXd& reconstructed, const Eigen::MatrixXd& basis,
                                 const std::vector<std::uint32_t>& indices,
                                 const std::vector<std::int64_t>& symbols, double bin) {
  Eigen::VectorXd out = reconstructed;
  for (std::size_t j = 0; j < indices.size(); ++j)
    out += basis.col(indices[j]) * (static_cast<double>(symbols[j]) * bin);
  return round_to<Storage>(out);
}

/// Uniform mid-tread coefficient quantizer (half away from zero).
inline std::int64_t quantize_coefficient(double c, double bin) { return std::llround(c / bin); }

template <typename Storage>
struct BlockCorrection {
  Eigen::VectorXd corrected;
  CorrectionRecord record;
  double error = 0.0;
};

/// Greedy error-bound correction of one block: selects the M largest |c_k|
/// (ties to the lower index), quantizes them, and grows M until
/// ||x - x^G||_2 <= tau, measured on the Storage-rounded output.
/// Throws BinTooCoarse if all D coefficients do not reach tau.
template <typename Storage = float>
BlockCorrection<Storage> guarantee_block(const Eigen::VectorXd& original, const Eigen::VectorXd& reconstructed,
                                         const Eigen::MatrixXd& basis, double tau, double bin) {
  require(tau > 0.0, Errc::invalid_argument, "tau must be positive");
  require(bin > 0.0, Errc::invalid_argument, "coefficient bin must be positive");
  require(original.size() == reconstructed.size() && basis.rows() == original.size() && basis.cols() == basis.rows(),
          Errc::shape_mismatch, "block and basis dimensions differ");

  BlockCorrection<Storage> out;
  out.corrected = reconstructed;
  out.error = (original - reconstructed).norm();
  if (out.error <= tau) return out;

  const Eigen::VectorXd coeffs = project(original - reconstructed, basis);
  const auto dim = static_cast<std::size_t>(coeffs.size());
  std::vector<std::uint32_t> order(dim);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return coeffs[a] * coeffs[a] > coeffs[b] * coeffs[b]; });

  for (std::size_t m = 1; m <= dim; ++m) {
    std::vector<std::uint32_t> selected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(selected.begin(), selected.end());
    std::vector<std::int64_t> symbols(m);
    for (std::size_t j = 0; j < m; ++j) symbols[j] = quantize_coefficient(coeffs[selected[j]], bin);
    out.corrected = apply_correction<Storage>(reconstructed, basis, selected, symbols, bin);
    out.error = (original - out.corrected).norm();
    if (out.error <= tau) {
      out.record.indices = std::move(selected);
      out.record.symbols = std::move(symbols);
      return out;
    }
  }
  throw Error(Errc::bin_too_coarse,
              "all coefficients leave error " + std::to_string(out.error) + " > tau " + std::to_string(tau));
}

using BlockRows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct GaeResult {
  BlockRows corrected;
  std::vector<CorrectionRecord> records;  // one per block, by block id
  PcaBasis basis;                          // as used, i.e. rounded through Storage
  GuaranteeReport report;
};

/// Full post-processing pass over N blocks (rows). The basis is fitted on
/// original - reconstructed and rounded through Storage before use.
template <typename Storage = float>
GaeResult guarantee_dataset(const BlockRows& original, const BlockRows& reconstructed, double tau, double bin,
                            unsigned workers = 1) {
  require(original.rows() == reconstructed.rows() && original.cols() == reconstructed.cols(), Errc::shape_mismatch,
          "original and reconstruction block counts differ");
  require(original.rows() >= 1, Errc::invalid_argument, "no blocks");
  GaeResult out;
  out.basis = fit_pca(original - reconstructed);
  out.basis.basis = out.basis.basis.template cast<Storage>().template cast<double>();

  const auto n = static_cast<std::size_t>(original.rows());
  out.corrected.resize(original.rows(), original.cols());
  out.records.resize(n);
  out.report.tau = tau;
  out.report.block_errors.assign(n, 0.0);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    try {
      auto fix = guarantee_block<Storage>(original.row(row).transpose(), reconstructed.row(row).transpose(),
                                          out.basis.basis, tau, bin);
      out.corrected.row(row) = fix.corrected.transpose();
      fix.record.block_id = i;
      out.records[i] = std::move(fix.record);
      out.report.block_errors[i] = fix.error;
    } catch (const Error& e) {
      if (e.code() != Errc::bin_too_coarse) throw;
      throw Error(Errc::bin_too_coarse, "block " + std::to_string(i) + ": " + e.what());
    }
  });
  for (const auto& r : out.records) {
    if (!r.empty()) ++out.report.corrected_blocks;
    out.report.total_coefficients += r.indices.size();
  }
  return out;
}

}  // namespace gcdc
