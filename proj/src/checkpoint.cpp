#include "gcdc/checkpoint.hpp"

#include <cstring>

#include "gcdc/bytes.hpp"

namespace gcdc::nn {

namespace {
constexpr char kMagic[4] = {'G', 'C', 'N', 'N'};
}

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
  ByteWriter w;
  for (char c : kMagic) w.put<std::uint8_t>(static_cast<std::uint8_t>(c));
  w.put<std::uint32_t>(Checkpoint::kVersion);
  w.put_string(ckpt.kind);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.dims.size()));
  for (auto d : ckpt.dims) w.put<std::uint32_t>(d);
  w.put<std::uint64_t>(ckpt.seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, m] : ckpt.tensors) {
    w.put_string(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    // Row-major on disk.
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    w.put_array(std::span<const float>(rm.data(), static_cast<std::size_t>(rm.size())));
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.extras.size()));
  for (double e : ckpt.extras) w.put<double>(e);
  return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.get_bytes(4);
  require(std::memcmp(magic.data(), kMagic, 4) == 0, Errc::corrupt_payload, "not a model checkpoint");
  const auto version = r.get<std::uint32_t>();
  require(version == Checkpoint::kVersion, Errc::version_mismatch,
          "checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.kind = r.get_string();
  const auto ndims = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < ndims; ++i) ckpt.dims.push_back(r.get<std::uint32_t>());
  ckpt.seed = r.get<std::uint64_t>();
  const auto ntensors = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < ntensors; ++i) {
    std::string name = r.get_string();
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    const auto values = r.get_array<float>(static_cast<std::size_t>(rows) * cols);
    Eigen::MatrixXf m = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), rows, cols);
    ckpt.tensors.emplace_back(std::move(name), std::move(m));
  }
  const auto nextras = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < nextras; ++i) ckpt.extras.push_back(r.get<double>());
  require(r.done(), Errc::corrupt_payload, "trailing bytes after checkpoint");
  return ckpt;
}

void store_parameters(Checkpoint& ckpt, const ParameterList& params) {
  for (const auto* p : params) ckpt.tensors.emplace_back(p->name, p->value.cast<float>());
}

void load_parameters(const Checkpoint& ckpt, const ParameterList& params) {
  require(ckpt.tensors.size() == params.size(), Errc::shape_mismatch,
          "checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
              std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, m] = ckpt.tensors[i];
    auto& p = *params[i];
    require(name == p.name, Errc::shape_mismatch, "checkpoint tensor '" + name + "' where '" + p.name + "' expected");
    require(m.rows() == p.value.rows() && m.cols() == p.value.cols(), Errc::shape_mismatch,
            "checkpoint tensor '" + name + "' has the wrong shape");
    p.value = m.cast<double>();
    p.grad.setZero(p.value.rows(), p.value.cols());
  }
}

}  // namespace gcdc::nn
