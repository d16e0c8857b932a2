#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcdc/error.hpp"

namespace gcdc::archive {

enum class SectionKind : std::uint8_t {
  model_weights = 1,
  hbae_latents = 2,
  bae_latents = 3,
  tables = 4,
  pca_basis = 5,
  gae_coefficients = 6,
  gae_indices = 7,
};

const char* to_string(SectionKind kind);

constexpr std::uint16_t kSharedGroup = 0xFFFF;

struct Section {
  SectionKind kind;
  std::uint16_t group = kSharedGroup;  // GAE group (e.g. variable) or shared
  std::vector<std::uint8_t> payload;
};

struct SectionEntry {
  SectionKind kind;
  std::uint16_t group;
  std::uint64_t offset;
  std::uint64_t length;
  std::uint32_t crc;
};

// File layout (little-endian):
//   "GCDC" | u32 version | u32 manifest_len | manifest (canonical JSON) | u32 manifest_crc
//   | u32 nsections | { u8 kind | u16 group | u64 offset | u64 length | u32 crc } x nsections
//   | u32 table_crc | section payloads at their offsets, contiguous to end of file
struct Archive {
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json manifest;
  std::vector<Section> sections;

  /// First section of a kind/group; throws CorruptPayload if absent.
  const Section& find(SectionKind kind, std::uint16_t group = kSharedGroup) const;
  bool has(SectionKind kind, std::uint16_t group = kSharedGroup) const;
};

std::vector<std::uint8_t> write_archive(const Archive& archive);

/// Throws VersionMismatch, TruncatedFile, ChecksumFail or CorruptPayload.
Archive read_archive(std::span<const std::uint8_t> bytes);

/// Bytes per section kind; the header (magic, manifest, section table) is
/// charged to "manifest".
struct SizeLedger {
  std::uint64_t manifest = 0;
  std::map<SectionKind, std::uint64_t> sections;
  std::map<std::uint16_t, std::uint64_t> per_group;  // GAE-side bytes per group (excluding shared)
  std::uint64_t file_size = 0;

  std::uint64_t bytes(SectionKind kind) const;
  std::uint64_t total() const;
  nlohmann::json to_json() const;
};

SizeLedger ledger_of(const Archive& archive);

enum class RatioPolicy { include_models, exclude_models, amortize_per_variable };

const char* to_string(RatioPolicy policy);
RatioPolicy ratio_policy_from_string(const std::string& s);

struct RatioReport {
  double overall = 0.0;
  std::vector<double> per_variable;  // filled for amortize_per_variable
};

/// original_bytes / counted compressed bytes. Model weights are counted only
/// under include_models. For amortize_per_variable the shared (non-GAE) cost
/// is split equally across `variables`; GAE sections are charged to their own
/// group when groups are variables, else split equally too.
RatioReport compression_ratio(std::uint64_t original_bytes, const SizeLedger& ledger, RatioPolicy policy,
                              std::size_t variables = 1, bool groups_are_variables = false);

}  // namespace gcdc::archive
