#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "gcdc/error.hpp"

namespace gcdc {

static_assert(std::endian::native == std::endian::little, "byte layouts assume a little-endian host");

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    const auto at = buf_.size();
    buf_.resize(at + sizeof(T));
    std::memcpy(buf_.data() + at, &v, sizeof(T));
  }

  void put_bytes(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  template <typename T>
  void put_array(std::span<const T> values) {
    const auto at = buf_.size();
    buf_.resize(at + values.size_bytes());
    if (!values.empty()) std::memcpy(buf_.data() + at, values.data(), values.size_bytes());
  }

  std::size_t size() const { return buf_.size(); }
  std::vector<std::uint8_t>& bytes() { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader; overruns raise `overrun_code`.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes, Errc overrun_code = Errc::truncated_file)
      : bytes_(bytes), code_(overrun_code) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    auto raw = get_bytes(n);
    return std::string(raw.begin(), raw.end());
  }

  template <typename T>
  std::vector<T> get_array(std::size_t n) {
    require(n <= remaining() / sizeof(T), code_, "array length exceeds remaining bytes");
    std::vector<T> out(n);
    if (n) std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return out;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    require(n <= bytes_.size() - pos_, code_, "read past end of buffer");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  Errc code_;
};

}  // namespace gcdc
