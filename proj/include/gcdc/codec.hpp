#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gcdc/bytes.hpp"
#include "gcdc/error.hpp"

namespace gcdc::codec {

// ---------------------------------------------------------------------------
// Uniform quantization

struct QuantizedStream {
  double bin = 1.0;
  std::vector<std::int64_t> symbols;

  std::size_t count() const { return symbols.size(); }
};

/// symbol = round(v / bin), ties away from zero. Throws Overflow when the
/// quotient leaves the signed 63-bit range or is not finite.
QuantizedStream quantize(std::span<const double> values, double bin);
std::vector<double> dequantize(const QuantizedStream& stream);

// ---------------------------------------------------------------------------
// Bit I/O, MSB first within each byte, zero padded to a byte boundary.

class BitWriter {
 public:
  void put(std::uint64_t code, unsigned length);
  void put_bit(bool bit) { put(bit ? 1u : 0u, 1); }
  std::uint64_t bit_count() const { return bits_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t bits_ = 0;
};

class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> bytes, std::uint64_t bit_count);
  bool get_bit();
  std::uint64_t position() const { return pos_; }
  bool done() const { return pos_ == bit_count_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::uint64_t bit_count_;
  std::uint64_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Canonical Huffman coding

/// Canonical code table. Entries are ordered by (length, symbol); codewords
/// are assigned consecutively in that order, so lengths alone define the code.
class HuffmanTable {
 public:
  struct Entry {
    std::int64_t symbol;
    std::uint8_t length;
    std::uint64_t code;
  };

  static constexpr unsigned kMaxLength = 48;

  HuffmanTable() = default;
  /// Code lengths from symbol frequencies. A one-symbol alphabet gets a 1-bit code.
  static HuffmanTable build(std::span<const std::int64_t> symbols);
  /// Rebuilds the canonical code from (symbol, length) pairs.
  static HuffmanTable from_lengths(std::vector<std::pair<std::int64_t, std::uint8_t>> lengths);

  /// u32 count | { i64 symbol | u8 length } in canonical order.
  void serialize(ByteWriter& out) const;
  static HuffmanTable deserialize(ByteReader& in);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const Entry& lookup(std::int64_t symbol) const;
  unsigned max_length() const { return entries_.empty() ? 0 : entries_.back().length; }

  /// Decodes one symbol; throws CorruptStream on an invalid codeword.
  std::int64_t decode_one(BitReader& bits) const;

 private:
  void assign_codes();

  std::vector<Entry> entries_;
  std::unordered_map<std::int64_t, std::uint32_t> index_;
  std::vector<std::uint64_t> first_code_;   // per length
  std::vector<std::uint32_t> first_index_;  // per length, into entries_
  std::vector<std::uint32_t> count_;        // per length
};

struct HuffmanStream {
  HuffmanTable table;
  std::vector<std::uint8_t> bits;
  std::uint64_t bit_count = 0;
  std::uint64_t symbol_count = 0;

  /// u64 symbol_count | u64 bit_count | payload bytes (table not included).
  void serialize_payload(ByteWriter& out) const;
};

HuffmanStream huffman_encode(std::span<const std::int64_t> symbols);
std::vector<std::int64_t> huffman_decode(const HuffmanTable& table, std::span<const std::uint8_t> bits,
                                         std::uint64_t bit_count, std::uint64_t symbol_count);
/// Reads a payload written by serialize_payload and decodes it with `table`.
std::vector<std::int64_t> huffman_decode_payload(const HuffmanTable& table, ByteReader& in);

// ---------------------------------------------------------------------------
// Index selection bitmask, stored as its shortest prefix holding every set bit.

struct IndexBitmask {
  std::vector<bool> prefix;

  std::size_t length() const { return prefix.size(); }
};

IndexBitmask encode_indices(const std::vector<bool>& mask);
/// Pads the prefix with zeros to `dim`. Throws LengthOverflow if the prefix is longer.
std::vector<bool> decode_indices(const IndexBitmask& encoded, std::size_t dim);

std::vector<bool> mask_from_indices(std::span<const std::uint32_t> indices, std::size_t dim);
std::vector<std::uint32_t> indices_from_mask(const std::vector<bool>& mask);

/// u32 count | u32 length[count] | concatenated prefix bits (MSB first, zero padded).
std::vector<std::uint8_t> pack_prefixes(std::span<const IndexBitmask> prefixes);
std::vector<IndexBitmask> unpack_prefixes(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Lossless byte backend

enum class Backend : std::uint8_t { store = 0, deflate = 1 };

const char* to_string(Backend backend);
Backend backend_from_string(const std::string& s);

/// u8 tag | u64 raw length | payload. Falls back to `store` when the backend
/// would expand the input; the tag records what was used.
std::vector<std::uint8_t> lossless_pack(std::span<const std::uint8_t> bytes, Backend backend = Backend::deflate);
/// Throws CorruptPayload on malformed containers.
std::vector<std::uint8_t> lossless_unpack(std::span<const std::uint8_t> bytes);

/// CRC-32 (IEEE) of a byte range.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace gcdc::codec
