#include "gcdc/codec.hpp"

namespace gcdc::codec {

IndexBitmask encode_indices(const std::vector<bool>& mask) {
  std::size_t length = 0;
  for (std::size_t i = mask.size(); i-- > 0;) {
    if (mask[i]) {
      length = i + 1;
      break;
    }
  }
  return {std::vector<bool>(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(length))};
}

std::vector<bool> decode_indices(const IndexBitmask& encoded, std::size_t dim) {
  require(encoded.length() <= dim, Errc::length_overflow,
          "prefix length " + std::to_string(encoded.length()) + " exceeds dimension " + std::to_string(dim));
  std::vector<bool> mask = encoded.prefix;
  mask.resize(dim, false);
  return mask;
}

std::vector<bool> mask_from_indices(std::span<const std::uint32_t> indices, std::size_t dim) {
  std::vector<bool> mask(dim, false);
  for (auto i : indices) {
    require(i < dim, Errc::length_overflow, "index " + std::to_string(i) + " outside dimension");
    mask[i] = true;
  }
  return mask;
}

std::vector<std::uint32_t> indices_from_mask(const std::vector<bool>& mask) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

std::vector<std::uint8_t> pack_prefixes(std::span<const IndexBitmask> prefixes) {
  ByteWriter out;
  out.put<std::uint32_t>(static_cast<std::uint32_t>(prefixes.size()));
  for (const auto& p : prefixes) out.put<std::uint32_t>(static_cast<std::uint32_t>(p.length()));
  BitWriter bits;
  for (const auto& p : prefixes)
    for (bool b : p.prefix) bits.put_bit(b);
  out.put_bytes(bits.bytes());
  return out.take();
}

std::vector<IndexBitmask> unpack_prefixes(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, Errc::corrupt_payload);
  const auto count = in.get<std::uint32_t>();
  const auto lengths = in.get_array<std::uint32_t>(count);
  std::uint64_t total = 0;
  for (auto l : lengths) total += l;
  const auto payload = in.get_bytes(in.remaining());
  require(payload.size() == (total + 7) / 8, Errc::corrupt_payload, "prefix payload size mismatch");
  BitReader bits(payload, total);
  std::vector<IndexBitmask> out(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    out[i].prefix.resize(lengths[i]);
    for (std::uint32_t j = 0; j < lengths[i]; ++j) out[i].prefix[j] = bits.get_bit();
    require(lengths[i] == 0 || out[i].prefix.back(), Errc::corrupt_payload, "prefix does not end in a set bit");
  }
  return out;
}

}  // namespace gcdc::codec
