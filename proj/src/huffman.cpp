#include <algorithm>
#include <map>
#include <queue>

#include "gcdc/codec.hpp"

namespace gcdc::codec {

void BitWriter::put(std::uint64_t code, unsigned length) {
  for (unsigned i = length; i-- > 0;) {
    if (bits_ % 8 == 0) bytes_.push_back(0);
    if ((code >> i) & 1u) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
    ++bits_;
  }
}

BitReader::BitReader(std::span<const std::uint8_t> bytes, std::uint64_t bit_count)
    : bytes_(bytes), bit_count_(bit_count) {
  require(bit_count <= bytes.size() * 8, Errc::corrupt_stream, "bit count exceeds payload");
}

bool BitReader::get_bit() {
  require(pos_ < bit_count_, Errc::corrupt_stream, "bitstream exhausted");
  const bool bit = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
  ++pos_;
  return bit;
}

namespace {

// Code lengths via the classic two-queue merge. Ties break on creation order,
// which starts from ascending symbol order, so lengths are deterministic.
std::vector<unsigned> code_lengths(const std::vector<std::uint64_t>& freq) {
  const std::size_t n = freq.size();
  if (n == 1) return {1};
  struct Node {
    std::uint64_t weight;
    std::size_t id;
  };
  auto heavier = [](const Node& a, const Node& b) { return a.weight != b.weight ? a.weight > b.weight : a.id > b.id; };
  std::priority_queue<Node, std::vector<Node>, decltype(heavier)> heap(heavier);
  std::vector<std::size_t> parent(2 * n - 1, 0);
  for (std::size_t i = 0; i < n; ++i) heap.push({freq[i], i});
  std::size_t next = n;
  while (heap.size() > 1) {
    const Node a = heap.top();
    heap.pop();
    const Node b = heap.top();
    heap.pop();
    parent[a.id] = parent[b.id] = next;
    heap.push({a.weight + b.weight, next++});
  }
  const std::size_t root = next - 1;
  std::vector<unsigned> depth(2 * n - 1, 0);
  for (std::size_t id = root; id-- > 0;) depth[id] = depth[parent[id]] + 1;
  return {depth.begin(), depth.begin() + static_cast<std::ptrdiff_t>(n)};
}

}  // namespace

HuffmanTable HuffmanTable::build(std::span<const std::int64_t> symbols) {
  std::map<std::int64_t, std::uint64_t> counts;
  for (auto s : symbols) ++counts[s];
  if (counts.empty()) return {};

  std::vector<std::int64_t> alphabet;
  std::vector<std::uint64_t> freq;
  for (const auto& [s, c] : counts) {
    alphabet.push_back(s);
    freq.push_back(c);
  }
  // Flatten the distribution until the deepest code fits.
  std::vector<unsigned> lengths = code_lengths(freq);
  while (*std::max_element(lengths.begin(), lengths.end()) > kMaxLength) {
    for (auto& f : freq) f = std::max<std::uint64_t>(1, f / 2);
    lengths = code_lengths(freq);
  }
  std::vector<std::pair<std::int64_t, std::uint8_t>> pairs;
  pairs.reserve(alphabet.size());
  for (std::size_t i = 0; i < alphabet.size(); ++i) pairs.emplace_back(alphabet[i], static_cast<std::uint8_t>(lengths[i]));
  return from_lengths(std::move(pairs));
}

HuffmanTable HuffmanTable::from_lengths(std::vector<std::pair<std::int64_t, std::uint8_t>> lengths) {
  HuffmanTable t;
  std::sort(lengths.begin(), lengths.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  for (const auto& [sym, len] : lengths) {
    require(len >= 1 && len <= kMaxLength, Errc::corrupt_stream, "invalid Huffman code length");
    t.entries_.push_back({sym, len, 0});
  }
  t.assign_codes();
  return t;
}

void HuffmanTable::assign_codes() {
  index_.clear();
  const unsigned max_len = max_length();
  first_code_.assign(max_len + 2, 0);
  first_index_.assign(max_len + 2, 0);
  count_.assign(max_len + 2, 0);
  for (const auto& e : entries_) ++count_[e.length];

  // Kraft inequality must hold for a prefix-free code.
  long double kraft = 0.0L;
  for (unsigned len = 1; len <= max_len; ++len) kraft += static_cast<long double>(count_[len]) / (1ULL << len);
  require(entries_.size() <= 1 || kraft <= 1.0L, Errc::corrupt_stream, "code lengths violate the Kraft inequality");

  std::uint64_t code = 0;
  std::uint32_t index = 0;
  for (unsigned len = 1; len <= max_len; ++len) {
    first_code_[len] = code;
    first_index_[len] = index;
    for (std::uint32_t j = 0; j < count_[len]; ++j) entries_[index + j].code = code + j;
    code = (code + count_[len]) << 1;
    index += count_[len];
  }
  for (std::uint32_t i = 0; i < entries_.size(); ++i) {
    const bool inserted = index_.emplace(entries_[i].symbol, i).second;
    require(inserted, Errc::corrupt_stream, "duplicate symbol in Huffman table");
  }
}

const HuffmanTable::Entry& HuffmanTable::lookup(std::int64_t symbol) const {
  const auto it = index_.find(symbol);
  require(it != index_.end(), Errc::invalid_argument, "symbol " + std::to_string(symbol) + " not in Huffman table");
  return entries_[it->second];
}

std::int64_t HuffmanTable::decode_one(BitReader& bits) const {
  std::uint64_t code = 0;
  for (unsigned len = 1; len <= max_length(); ++len) {
    code = (code << 1) | (bits.get_bit() ? 1u : 0u);
    if (count_[len] != 0 && code >= first_code_[len] && code - first_code_[len] < count_[len])
      return entries_[first_index_[len] + (code - first_code_[len])].symbol;
  }
  throw Error(Errc::corrupt_stream, "invalid Huffman codeword");
}

void HuffmanTable::serialize(ByteWriter& out) const {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    out.put<std::int64_t>(e.symbol);
    out.put<std::uint8_t>(e.length);
  }
}

HuffmanTable HuffmanTable::deserialize(ByteReader& in) {
  const auto n = in.get<std::uint32_t>();
  require(n <= in.remaining() / 9, Errc::corrupt_stream, "Huffman table larger than its payload");
  std::vector<std::pair<std::int64_t, std::uint8_t>> pairs;
  pairs.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto sym = in.get<std::int64_t>();
    const auto len = in.get<std::uint8_t>();
    pairs.emplace_back(sym, len);
  }
  return from_lengths(std::move(pairs));
}

void HuffmanStream::serialize_payload(ByteWriter& out) const {
  out.put<std::uint64_t>(symbol_count);
  out.put<std::uint64_t>(bit_count);
  out.put_bytes(bits);
}

HuffmanStream huffman_encode(std::span<const std::int64_t> symbols) {
  HuffmanStream out;
  out.table = HuffmanTable::build(symbols);
  out.symbol_count = symbols.size();
  BitWriter writer;
  for (auto s : symbols) {
    const auto& e = out.table.lookup(s);
    writer.put(e.code, e.length);
  }
  out.bit_count = writer.bit_count();
  out.bits = writer.take();
  return out;
}

std::vector<std::int64_t> huffman_decode(const HuffmanTable& table, std::span<const std::uint8_t> bits,
                                         std::uint64_t bit_count, std::uint64_t symbol_count) {
  require(bits.size() == (bit_count + 7) / 8, Errc::corrupt_stream, "payload size does not match bit count");
  require(symbol_count == 0 || table.size() > 0, Errc::corrupt_stream, "symbols present but table empty");
  require(symbol_count <= bit_count, Errc::corrupt_stream, "more symbols than bits");
  BitReader reader(bits, bit_count);
  std::vector<std::int64_t> out;
  out.reserve(symbol_count);
  for (std::uint64_t i = 0; i < symbol_count; ++i) out.push_back(table.decode_one(reader));
  require(reader.done(), Errc::corrupt_stream, "trailing bits after last symbol");
  return out;
}

std::vector<std::int64_t> huffman_decode_payload(const HuffmanTable& table, ByteReader& in) {
  const auto count = in.get<std::uint64_t>();
  const auto bit_count = in.get<std::uint64_t>();
  require(bit_count / 8 <= in.remaining(), Errc::corrupt_stream, "bitstream longer than payload");
  const auto bytes = in.get_bytes(static_cast<std::size_t>((bit_count + 7) / 8));
  return huffman_decode(table, bytes, bit_count, count);
}

}  // namespace gcdc::codec
