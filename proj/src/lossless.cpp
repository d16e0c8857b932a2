#include <zlib.h>

#include "gcdc/codec.hpp"

namespace gcdc::codec {

const char* to_string(Backend backend) {
  switch (backend) {
    case Backend::store: return "store";
    case Backend::deflate: return "deflate";
  }
  return "store";
}

Backend backend_from_string(const std::string& s) {
  if (s == "store") return Backend::store;
  if (s == "deflate") return Backend::deflate;
  throw Error(Errc::invalid_argument, "unknown lossless backend '" + s + "'");
}

namespace {

std::vector<std::uint8_t> stored(std::span<const std::uint8_t> bytes) {
  ByteWriter out;
  out.put<std::uint8_t>(static_cast<std::uint8_t>(Backend::store));
  out.put<std::uint64_t>(bytes.size());
  out.put_bytes(bytes);
  return out.take();
}

}  // namespace

std::vector<std::uint8_t> lossless_pack(std::span<const std::uint8_t> bytes, Backend backend) {
  if (backend == Backend::store || bytes.empty()) return stored(bytes);

  uLongf bound = compressBound(static_cast<uLong>(bytes.size()));
  std::vector<std::uint8_t> packed(bound);
  const int rc = compress2(packed.data(), &bound, bytes.data(), static_cast<uLong>(bytes.size()), Z_BEST_COMPRESSION);
  require(rc == Z_OK, Errc::corrupt_payload, "deflate failed with code " + std::to_string(rc));
  if (bound >= bytes.size()) return stored(bytes);

  ByteWriter out;
  out.put<std::uint8_t>(static_cast<std::uint8_t>(Backend::deflate));
  out.put<std::uint64_t>(bytes.size());
  out.put_bytes(std::span(packed.data(), bound));
  return out.take();
}

std::vector<std::uint8_t> lossless_unpack(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, Errc::corrupt_payload);
  const auto tag = in.get<std::uint8_t>();
  const auto raw_size = in.get<std::uint64_t>();
  const auto payload = in.get_bytes(in.remaining());
  if (tag == static_cast<std::uint8_t>(Backend::store)) {
    require(payload.size() == raw_size, Errc::corrupt_payload, "stored payload length mismatch");
    return {payload.begin(), payload.end()};
  }
  require(tag == static_cast<std::uint8_t>(Backend::deflate), Errc::corrupt_payload,
          "unknown backend tag " + std::to_string(tag));
  // Deflate cannot expand data beyond ~1032:1.
  require(raw_size <= payload.size() * 1040 + 64, Errc::corrupt_payload, "implausible raw length");
  std::vector<std::uint8_t> out(raw_size);
  uLongf out_len = static_cast<uLongf>(raw_size);
  const int rc = uncompress(out.data(), &out_len, payload.data(), static_cast<uLong>(payload.size()));
  require(rc == Z_OK && out_len == raw_size, Errc::corrupt_payload, "inflate failed");
  return out;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(::crc32_z(0L, bytes.data(), bytes.size()));
}

}  // namespace gcdc::codec
