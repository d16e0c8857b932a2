#include "gcdc/archive.hpp"

#include <cstring>

#include "gcdc/bytes.hpp"
#include "gcdc/codec.hpp"

namespace gcdc::archive {

namespace {

constexpr char kMagic[4] = {'G', 'C', 'D', 'C'};
constexpr std::size_t kEntryBytes = 1 + 2 + 8 + 8 + 4;

bool is_gae_kind(SectionKind kind) {
  return kind == SectionKind::pca_basis || kind == SectionKind::gae_coefficients ||
         kind == SectionKind::gae_indices;
}

}  // namespace

const char* to_string(SectionKind kind) {
  switch (kind) {
    case SectionKind::model_weights: return "model_weights";
    case SectionKind::hbae_latents: return "hbae_latents";
    case SectionKind::bae_latents: return "bae_latents";
    case SectionKind::tables: return "tables";
    case SectionKind::pca_basis: return "pca_basis";
    case SectionKind::gae_coefficients: return "gae_coefficients";
    case SectionKind::gae_indices: return "gae_indices";
  }
  return "unknown";
}

const Section& Archive::find(SectionKind kind, std::uint16_t group) const {
  for (const auto& s : sections)
    if (s.kind == kind && s.group == group) return s;
  throw Error(Errc::corrupt_payload, std::string("archive has no ") + to_string(kind) + " section for group " +
                                         std::to_string(group));
}

bool Archive::has(SectionKind kind, std::uint16_t group) const {
  for (const auto& s : sections)
    if (s.kind == kind && s.group == group) return true;
  return false;
}

std::vector<std::uint8_t> write_archive(const Archive& archive) {
  const std::string manifest = archive.manifest.dump();
  const auto manifest_bytes = std::span(reinterpret_cast<const std::uint8_t*>(manifest.data()), manifest.size());

  ByteWriter out;
  for (char c : kMagic) out.put<std::uint8_t>(static_cast<std::uint8_t>(c));
  out.put<std::uint32_t>(Archive::kVersion);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(manifest.size()));
  out.put_bytes(manifest_bytes);
  out.put<std::uint32_t>(codec::crc32(manifest_bytes));

  const std::uint64_t header_size =
      out.size() + 4 + archive.sections.size() * kEntryBytes + 4;
  ByteWriter table;
  table.put<std::uint32_t>(static_cast<std::uint32_t>(archive.sections.size()));
  std::uint64_t offset = header_size;
  for (const auto& s : archive.sections) {
    table.put<std::uint8_t>(static_cast<std::uint8_t>(s.kind));
    table.put<std::uint16_t>(s.group);
    table.put<std::uint64_t>(offset);
    table.put<std::uint64_t>(s.payload.size());
    table.put<std::uint32_t>(codec::crc32(s.payload));
    offset += s.payload.size();
  }
  const auto table_bytes = table.take();
  out.put_bytes(table_bytes);
  out.put<std::uint32_t>(codec::crc32(table_bytes));
  for (const auto& s : archive.sections) out.put_bytes(s.payload);
  return out.take();
}

Archive read_archive(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, Errc::truncated_file);
  const auto magic = in.get_bytes(4);
  require(std::memcmp(magic.data(), kMagic, 4) == 0, Errc::corrupt_payload, "not a GCDC archive");
  const auto version = in.get<std::uint32_t>();
  require(version == Archive::kVersion, Errc::version_mismatch,
          "archive version " + std::to_string(version) + ", reader supports " + std::to_string(Archive::kVersion));

  const auto manifest_len = in.get<std::uint32_t>();
  const auto manifest_bytes = in.get_bytes(manifest_len);
  require(in.get<std::uint32_t>() == codec::crc32(manifest_bytes), Errc::checksum_fail, "manifest CRC mismatch");

  Archive archive;
  try {
    archive.manifest = nlohmann::json::parse(manifest_bytes.begin(), manifest_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::corrupt_payload, std::string("manifest is not valid JSON: ") + e.what());
  }

  const std::size_t table_start = in.position();
  const auto count = in.get<std::uint32_t>();
  require(count <= in.remaining() / kEntryBytes, Errc::truncated_file, "section table longer than file");
  std::vector<SectionEntry> entries(count);
  for (auto& e : entries) {
    e.kind = static_cast<SectionKind>(in.get<std::uint8_t>());
    e.group = in.get<std::uint16_t>();
    e.offset = in.get<std::uint64_t>();
    e.length = in.get<std::uint64_t>();
    e.crc = in.get<std::uint32_t>();
  }
  const auto table_bytes = bytes.subspan(table_start, in.position() - table_start);
  require(in.get<std::uint32_t>() == codec::crc32(table_bytes), Errc::checksum_fail, "section table CRC mismatch");

  std::uint64_t expected = in.position();
  for (const auto& e : entries) {
    require(e.offset == expected, Errc::corrupt_payload, "sections are not contiguous");
    require(e.length <= bytes.size() - std::min<std::uint64_t>(e.offset, bytes.size()), Errc::truncated_file,
            std::string(to_string(e.kind)) + " section runs past end of file");
    const auto payload = bytes.subspan(e.offset, e.length);
    require(codec::crc32(payload) == e.crc, Errc::checksum_fail,
            std::string(to_string(e.kind)) + " section CRC mismatch");
    archive.sections.push_back({e.kind, e.group, {payload.begin(), payload.end()}});
    expected += e.length;
  }
  require(expected == bytes.size(), Errc::corrupt_payload, "trailing bytes after last section");
  return archive;
}

std::uint64_t SizeLedger::bytes(SectionKind kind) const {
  const auto it = sections.find(kind);
  return it == sections.end() ? 0 : it->second;
}

std::uint64_t SizeLedger::total() const {
  std::uint64_t sum = manifest;
  for (const auto& [kind, n] : sections) sum += n;
  return sum;
}

nlohmann::json SizeLedger::to_json() const {
  nlohmann::json j;
  j["manifest"] = manifest;
  for (auto kind : {SectionKind::model_weights, SectionKind::hbae_latents, SectionKind::bae_latents,
                    SectionKind::tables, SectionKind::pca_basis, SectionKind::gae_coefficients,
                    SectionKind::gae_indices})
    j[to_string(kind)] = bytes(kind);
  j["file_size"] = file_size;
  return j;
}

SizeLedger ledger_of(const Archive& archive) {
  SizeLedger ledger;
  const std::string manifest = archive.manifest.dump();
  ledger.manifest = 4 + 4 + 4 + manifest.size() + 4 + 4 + archive.sections.size() * kEntryBytes + 4;
  for (const auto& s : archive.sections) {
    ledger.sections[s.kind] += s.payload.size();
    if (s.group != kSharedGroup && (is_gae_kind(s.kind) || s.kind == SectionKind::tables))
      ledger.per_group[s.group] += s.payload.size();
  }
  ledger.file_size = ledger.total();
  return ledger;
}

const char* to_string(RatioPolicy policy) {
  switch (policy) {
    case RatioPolicy::include_models: return "include_models";
    case RatioPolicy::exclude_models: return "exclude_models";
    case RatioPolicy::amortize_per_variable: return "amortize_per_variable";
  }
  return "exclude_models";
}

RatioPolicy ratio_policy_from_string(const std::string& s) {
  if (s == "include_models") return RatioPolicy::include_models;
  if (s == "exclude_models") return RatioPolicy::exclude_models;
  if (s == "amortize_per_variable") return RatioPolicy::amortize_per_variable;
  throw Error(Errc::invalid_argument, "unknown ratio policy '" + s + "'");
}

RatioReport compression_ratio(std::uint64_t original_bytes, const SizeLedger& ledger, RatioPolicy policy,
                              std::size_t variables, bool groups_are_variables) {
  const std::uint64_t models = ledger.bytes(SectionKind::model_weights);
  const std::uint64_t counted = policy == RatioPolicy::include_models ? ledger.total() : ledger.total() - models;
  RatioReport out;
  out.overall = counted == 0 ? 0.0 : static_cast<double>(original_bytes) / static_cast<double>(counted);
  if (policy != RatioPolicy::amortize_per_variable) return out;

  require(variables >= 1, Errc::invalid_argument, "variable count must be >= 1");
  const auto v = static_cast<double>(variables);
  std::uint64_t grouped = 0;
  for (const auto& [g, n] : ledger.per_group) grouped += n;
  const double shared = static_cast<double>(counted - (groups_are_variables ? grouped : 0)) / v;
  const double original_per_var = static_cast<double>(original_bytes) / v;
  for (std::size_t i = 0; i < variables; ++i) {
    double cost = shared;
    if (groups_are_variables) {
      const auto it = ledger.per_group.find(static_cast<std::uint16_t>(i));
      cost += it == ledger.per_group.end() ? 0.0 : static_cast<double>(it->second);
    }
    out.per_variable.push_back(cost == 0.0 ? 0.0 : original_per_var / cost);
  }
  return out;
}

}  // namespace gcdc::archive
