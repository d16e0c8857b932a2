#include "gcdc/io.hpp"

#include <fstream>
#include <sstream>

#include "gcdc/bytes.hpp"

namespace gcdc::io {

namespace fs = std::filesystem;

RawHeader parse_header(const std::string& text) {
  RawHeader h;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key.starts_with('#')) continue;
    if (key == "shape") {
      std::size_t n;
      while (ls >> n) h.shape.push_back(n);
    } else if (key == "roles") {
      std::string r;
      while (ls >> r) h.roles.push_back(axis_role_from_string(r));
    } else if (key == "dtype") {
      std::string t;
      ls >> t;
      require(t == "float32", Errc::invalid_argument, "only float32 raw data is supported, got " + t);
    } else if (key == "endian") {
      std::string e;
      ls >> e;
      require(e == "little", Errc::invalid_argument, "only little-endian raw data is supported");
    } else {
      throw Error(Errc::invalid_argument, "unknown header key '" + key + "'");
    }
  }
  require(!h.shape.empty(), Errc::invalid_argument, "header has no shape");
  if (h.roles.empty()) h.roles.assign(h.shape.size(), AxisRole::space);
  require(h.roles.size() == h.shape.size(), Errc::rank_mismatch, "header roles do not match shape rank");
  return h;
}

std::string format_header(const RawHeader& header) {
  std::ostringstream out;
  out << "shape";
  for (auto n : header.shape) out << ' ' << n;
  out << "\nroles";
  for (auto r : header.roles) out << ' ' << to_string(r);
  out << "\ndtype float32\nendian little\n";
  return out.str();
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  require(static_cast<bool>(in) || size == 0, Errc::io, "short read on " + path.string());
  return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), Errc::io, "write failed on " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

fs::path sidecar(const fs::path& data, const fs::path& header) {
  if (!header.empty()) return header;
  fs::path h = data;
  h += ".hdr";
  return h;
}

std::string read_text(const fs::path& path) {
  auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace

Dataset read_raw(const fs::path& path, const fs::path& header) {
  const RawHeader h = parse_header(read_text(sidecar(path, header)));
  const auto bytes = read_file(path);
  const std::size_t n = element_count(h.shape);
  require(bytes.size() == n * sizeof(float), Errc::shape_mismatch,
          path.string() + " holds " + std::to_string(bytes.size()) + " bytes, header expects " +
              std::to_string(n * sizeof(float)));
  Dataset ds;
  ds.shape = h.shape;
  ds.roles = h.roles;
  ByteReader reader(bytes);
  ds.values = reader.get_array<float>(n);
  ds.validate();
  return ds;
}

void write_raw(const Dataset& ds, const fs::path& path, const fs::path& header) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(ds.values.data()), ds.values.size() * sizeof(float)));
  write_text(sidecar(path, header), format_header({ds.shape, ds.roles}));
}

Dataset read_csv(const fs::path& path, Shape shape, std::vector<AxisRole> roles) {
  std::string text = read_text(path);
  for (auto& c : text)
    if (c == ',' || c == ';') c = ' ';
  std::istringstream in(text);
  Dataset ds;
  std::string tok;
  while (in >> tok) {
    try {
      ds.values.push_back(std::stof(tok));
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, "bad CSV value '" + tok + "'");
    }
  }
  ds.shape = shape.empty() ? Shape{ds.values.size()} : std::move(shape);
  ds.roles = roles.empty() ? std::vector<AxisRole>(ds.shape.size(), AxisRole::space) : std::move(roles);
  ds.validate();
  return ds;
}

}  // namespace gcdc::io
