#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gcdc/tensor.hpp"

namespace gcdc::io {

// Sidecar header, one key per line:
//   shape 8 40 32 32
//   roles variable time space space
//   dtype float32
//   endian little
struct RawHeader {
  Shape shape;
  std::vector<AxisRole> roles;
};

RawHeader parse_header(const std::string& text);
std::string format_header(const RawHeader& header);

/// Reads little-endian float32 values; the header defaults to `path + ".hdr"`.
Dataset read_raw(const std::filesystem::path& path, const std::filesystem::path& header = {});
void write_raw(const Dataset& ds, const std::filesystem::path& path, const std::filesystem::path& header = {});

/// Comma/whitespace separated values for tiny arrays. An empty shape reads a 1-D array.
Dataset read_csv(const std::filesystem::path& path, Shape shape = {}, std::vector<AxisRole> roles = {});

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace gcdc::io
