#include <cmath>

#include "gcdc/codec.hpp"

namespace gcdc::codec {

QuantizedStream quantize(std::span<const double> values, double bin) {
  require(bin > 0.0 && std::isfinite(bin), Errc::invalid_argument, "quantization bin must be positive");
  QuantizedStream out;
  out.bin = bin;
  out.symbols.reserve(values.size());
  constexpr double kLimit = 0x1.0p63;
  for (double v : values) {
    const double q = v / bin;
    require(std::isfinite(q) && std::fabs(q) < kLimit, Errc::overflow,
            "value " + std::to_string(v) + " / bin exceeds the symbol range");
    out.symbols.push_back(std::llround(q));
  }
  return out;
}

std::vector<double> dequantize(const QuantizedStream& stream) {
  std::vector<double> out;
  out.reserve(stream.symbols.size());
  for (auto s : stream.symbols) out.push_back(static_cast<double>(s) * stream.bin);
  return out;
}

}  // namespace gcdc::codec
