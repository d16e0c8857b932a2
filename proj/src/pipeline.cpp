#include "gcdc/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#include "gcdc/bytes.hpp"
#include "gcdc/io.hpp"
#include "gcdc/parallel.hpp"

namespace gcdc {

namespace {

using nlohmann::json;
using archive::SectionKind;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Slices along the group axis

struct Slicing {
  std::size_t outer = 1, extent = 1, inner = 1;
  Shape slice_shape;

  Slicing(const Shape& shape, std::optional<std::size_t> axis) : slice_shape(shape) {
    if (!axis) {
      inner = element_count(shape);
      return;
    }
    for (std::size_t d = 0; d < *axis; ++d) outer *= shape[d];
    extent = shape[*axis];
    for (std::size_t d = *axis + 1; d < shape.size(); ++d) inner *= shape[d];
    slice_shape[*axis] = 1;
  }

  std::size_t count() const { return extent; }

  std::vector<float> take(const std::vector<float>& values, std::size_t s) const {
    std::vector<float> out;
    out.reserve(outer * inner);
    for (std::size_t o = 0; o < outer; ++o) {
      const auto* first = values.data() + (o * extent + s) * inner;
      out.insert(out.end(), first, first + inner);
    }
    return out;
  }

  void put(std::vector<float>& values, std::size_t s, const std::vector<float>& slice) const {
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(slice.data() + o * inner, inner, values.data() + (o * extent + s) * inner);
  }
};

BlockRows block_rows(const Shape& shape, const std::vector<float>& values, const Shape& block_shape) {
  return partition<float>(shape, std::span<const float>(values), block_shape).rows.cast<double>();
}

std::vector<float> unblock(const Shape& shape, const Shape& block_shape, const BlockRows& rows) {
  BlockSet<float> set;
  set.data_shape = shape;
  set.block_shape = block_shape;
  set.grid = block_grid(shape, block_shape);
  set.rows = rows.cast<float>();
  return reassemble(set);
}

/// Block errors computed exactly as the guarantee loop measures them.
std::vector<double> block_errors(const BlockRows& original, const BlockRows& corrected) {
  std::vector<double> out(static_cast<std::size_t>(original.rows()));
  for (Index i = 0; i < original.rows(); ++i) {
    const Eigen::VectorXd a = original.row(i).transpose();
    const Eigen::VectorXd b = corrected.row(i).transpose();
    out[static_cast<std::size_t>(i)] = (a - b).norm();
  }
  return out;
}

const NormStats& group_stats(const Normalization& norm, std::size_t g) {
  return norm.groups.size() == 1 ? norm.groups[0] : norm.groups.at(g);
}

// ---------------------------------------------------------------------------
// Byte helpers

std::vector<std::uint8_t> pack(ByteWriter& w, codec::Backend backend) {
  return codec::lossless_pack(w.bytes(), backend);
}

std::vector<std::uint8_t> encode_stream(const codec::HuffmanStream& stream, codec::Backend backend) {
  ByteWriter w;
  stream.serialize_payload(w);
  return pack(w, backend);
}

std::vector<std::int64_t> decode_stream(const codec::HuffmanTable& table, std::span<const std::uint8_t> packed) {
  const auto raw = codec::lossless_unpack(packed);
  ByteReader in(raw, Errc::corrupt_payload);
  auto symbols = codec::huffman_decode_payload(table, in);
  require(in.done(), Errc::corrupt_payload, "trailing bytes after latent stream");
  return symbols;
}

json norm_to_json(const Normalization& norm) {
  json stats = json::array();
  for (const auto& s : norm.groups) stats.push_back({{"mean", s.mean}, {"scale", s.scale}, {"constant", s.constant}});
  return {{"mode", to_string(norm.mode)},
          {"group_axis", norm.group_axis ? json(*norm.group_axis) : json(nullptr)},
          {"stats", stats}};
}

Normalization norm_from_json(const json& j) {
  Normalization norm;
  norm.mode = norm_mode_from_string(j.at("mode").get<std::string>());
  if (!j.at("group_axis").is_null()) norm.group_axis = j.at("group_axis").get<std::size_t>();
  for (const auto& s : j.at("stats"))
    norm.groups.push_back({s.at("mean").get<double>(), s.at("scale").get<double>(), s.at("constant").get<bool>()});
  return norm;
}

std::vector<std::uint8_t> model_section(const TrainedModels& models, codec::Backend backend) {
  ByteWriter w;
  for (const auto& ckpt : {models.hbae.to_checkpoint(), models.bae.to_checkpoint()}) {
    const auto bytes = nn::serialize(ckpt);
    w.put<std::uint64_t>(bytes.size());
    w.put_bytes(bytes);
  }
  return pack(w, backend);
}

TrainedModels models_from_section(std::span<const std::uint8_t> packed) {
  const auto raw = codec::lossless_unpack(packed);
  ByteReader in(raw, Errc::corrupt_payload);
  TrainedModels models;
  const auto next = [&] { return nn::deserialize_checkpoint(in.get_bytes(in.get<std::uint64_t>())); };
  models.hbae = HbaeModel::from_checkpoint(next());
  models.bae = BaeModel::from_checkpoint(next());
  require(in.done(), Errc::corrupt_payload, "trailing bytes after model weights");
  return models;
}

json block_spec_json(const BlockSpec& spec) {
  return {{"shape", spec.block_shape}, {"hyper_k", spec.hyper_k}, {"hyper_axis", spec.hyper_axis}};
}

/// Rebuilds x^R in the original domain from the two dequantized latent sets.
Dataset ae_reconstruction(const Mat& xr, const BlockSet<float>& layout, const std::vector<AxisRole>& roles,
                          const Normalization& norm) {
  BlockSet<float> out;
  out.data_shape = layout.data_shape;
  out.block_shape = layout.block_shape;
  out.grid = layout.grid;
  out.rows = xr.cast<float>();
  return reassemble(out, roles, norm);
}

}  // namespace

// ---------------------------------------------------------------------------

Dataset load_dataset(const PipelineConfig& config) {
  if (config.synthetic) return generate_synthetic(config.synthetic->kind, config.synthetic->shape, config.synthetic->seed);
  require(!config.dataset_path.empty(), Errc::invalid_argument, "config names neither a dataset path nor synthetic data");
  return io::read_raw(config.dataset_path, config.header_path);
}

std::optional<std::size_t> variable_axis(const Dataset& ds, const PipelineConfig& config) {
  if (config.group_axis) return config.group_axis;
  for (std::size_t d = 0; d < ds.rank(); ++d)
    if (ds.roles[d] == AxisRole::variable) return d;
  return std::nullopt;
}

Mat gather_hyper_rows(const BlockSet<float>& blocks, const std::vector<HyperBlock>& hypers) {
  require(!hypers.empty(), Errc::invalid_argument, "no hyper-blocks");
  const auto k = static_cast<Index>(hypers.front().block_ids.size());
  Mat out(static_cast<Index>(hypers.size()) * k, static_cast<Index>(blocks.block_dim()));
  for (std::size_t h = 0; h < hypers.size(); ++h)
    for (Index j = 0; j < k; ++j)
      out.row(static_cast<Index>(h) * k + j) =
          blocks.rows.row(static_cast<Index>(hypers[h].block_ids[static_cast<std::size_t>(j)])).cast<double>();
  return out;
}

Prepared prepare(const Dataset& ds, const PipelineConfig& config) {
  ds.validate();
  Prepared p;
  auto [normalized, norm] = normalize(ds, config.norm_mode, config.group_axis);
  p.norm = std::move(norm);
  p.blocks = partition(normalized, config.ae_blocks);
  p.hypers = group_hyper(p.blocks.grid, config.ae_blocks);
  p.hyper_rows = gather_hyper_rows(p.blocks, p.hypers);
  return p;
}

Mat decode_hbae_blocks(const HbaeModel& model, const Mat& latents, const std::vector<HyperBlock>& hypers,
                       std::size_t block_count) {
  require(latents.rows() == static_cast<Index>(hypers.size()), Errc::shape_mismatch,
          "HBAE latent count != hyper-block count");
  const Mat rows = model.decode(latents);
  const Index k = model.config().hyper_k;
  Mat out(static_cast<Index>(block_count), rows.cols());
  std::vector<bool> seen(block_count, false);
  for (std::size_t h = 0; h < hypers.size(); ++h) {
    const auto& ids = hypers[h].block_ids;
    for (std::size_t j = 0; j + hypers[h].pad < ids.size(); ++j) {
      require(ids[j] < block_count, Errc::missing_block, "hyper-block refers to a block outside the grid");
      out.row(static_cast<Index>(ids[j])) = rows.row(static_cast<Index>(h) * k + static_cast<Index>(j));
      seen[ids[j]] = true;
    }
  }
  for (bool s : seen) require(s, Errc::missing_block, "a block belongs to no hyper-block");
  return out;
}

codec::QuantizedStream quantize_latents(const Mat& latents, double bin) {
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = latents.cast<float>();
  std::vector<double> values(f.data(), f.data() + f.size());
  return codec::quantize(values, bin);
}

Mat dequantize_latents(const codec::QuantizedStream& stream, Index rows, Index cols) {
  require(static_cast<Index>(stream.count()) == rows * cols, Errc::shape_mismatch, "latent stream has wrong length");
  const auto values = codec::dequantize(stream);
  return Eigen::Map<const Mat>(values.data(), rows, cols);
}

// ---------------------------------------------------------------------------

TrainedModels train_models(const Dataset& ds, const PipelineConfig& config, const ProgressFn& progress) {
  const Prepared p = prepare(ds, config);
  TrainedModels out;

  TrainOptions hopt{.epochs = config.training.hbae_epochs,
                    .batch = config.training.batch,
                    .lr = config.training.lr,
                    .seed = config.seed + 1,
                    .on_epoch = {}};
  if (progress) hopt.on_epoch = [&](int e, double loss) { progress("hbae", e, loss); };
  auto hbae = train_hbae(p.hyper_rows, config.hbae, hopt, config.seed);
  out.hbae = std::move(hbae.model);
  out.hbae_log = std::move(hbae.log);
  out.hbae.round_to_float();

  // The BAE learns the residual left by what the decoder will actually see:
  // the HBAE output from quantized latents.
  const auto codes = quantize_latents(out.hbae.encode(p.hyper_rows), config.bins.hbae);
  const Mat y = decode_hbae_blocks(
      out.hbae, dequantize_latents(codes, static_cast<Index>(p.hypers.size()), config.hbae.latent_dim), p.hypers,
      p.blocks.count());

  TrainOptions bopt{.epochs = config.training.bae_epochs,
                    .batch = config.training.batch * config.hbae.hyper_k,
                    .lr = config.training.lr,
                    .seed = config.seed + 3,
                    .on_epoch = {}};
  if (progress) bopt.on_epoch = [&](int e, double loss) { progress("bae", e, loss); };
  auto bae = train_bae(p.block_rows(), y, config.bae, bopt, config.seed + 2);
  out.bae = std::move(bae.model);
  out.bae_log = std::move(bae.log);
  out.bae.round_to_float();
  return out;
}

void save_models(const TrainedModels& models, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_file(dir / "hbae.ckpt", nn::serialize(models.hbae.to_checkpoint()));
  io::write_file(dir / "bae.ckpt", nn::serialize(models.bae.to_checkpoint()));
}

TrainedModels load_models(const std::filesystem::path& dir) {
  TrainedModels models;
  models.hbae = HbaeModel::from_checkpoint(nn::deserialize_checkpoint(io::read_file(dir / "hbae.ckpt")));
  models.bae = BaeModel::from_checkpoint(nn::deserialize_checkpoint(io::read_file(dir / "bae.ckpt")));
  return models;
}

AeStage run_autoencoders(const Dataset& ds, const TrainedModels& models, const PipelineConfig& config) {
  const auto start = Clock::now();
  require(models.hbae.config().block_dim == config.hbae.block_dim &&
              models.hbae.config().hyper_k == config.hbae.hyper_k &&
              models.bae.config().block_dim == config.bae.block_dim,
          Errc::shape_mismatch, "models were trained for a different block layout");
  AeStage s;
  s.prepared = prepare(ds, config);
  const auto& p = s.prepared;
  const auto hyper_count = static_cast<Index>(p.hypers.size());
  const auto block_count = static_cast<Index>(p.blocks.count());

  s.hbae_codes = quantize_latents(models.hbae.encode(p.hyper_rows), config.bins.hbae);
  s.y = decode_hbae_blocks(models.hbae,
                           dequantize_latents(s.hbae_codes, hyper_count, models.hbae.config().latent_dim), p.hypers,
                           p.blocks.count());
  s.bae_codes = quantize_latents(models.bae.encode(p.block_rows(), s.y), config.bins.bae);
  s.xr = models.bae.decode(dequantize_latents(s.bae_codes, block_count, models.bae.config().latent_dim), s.y);
  s.reconstruction = ae_reconstruction(s.xr, p.blocks, ds.roles, p.norm);
  s.seconds = seconds_since(start);
  return s;
}

// ---------------------------------------------------------------------------

double EvalReport::mean_variable_nrmse() const {
  if (per_variable_nrmse.empty()) return nrmse;
  double sum = 0.0;
  for (double v : per_variable_nrmse) sum += v;
  return sum / static_cast<double>(per_variable_nrmse.size());
}

json EvalReport::to_json() const {
  json j;
  j["nrmse"] = nrmse;
  if (!per_variable_nrmse.empty()) {
    j["per_variable_nrmse"] = per_variable_nrmse;
    j["mean_variable_nrmse"] = mean_variable_nrmse();
  }
  j["max_block_error"] = max_block_error;
  j["relative_point_error_histogram"] = {{"edges", histogram.edges}, {"counts", histogram.counts}};
  j["timings_seconds"] = timings;
  if (tau) {
    j["tau"] = *tau;
    json list = json::array();
    for (const auto& g : groups)
      list.push_back({{"tau", g.tau},
                        {"bin", g.bin},
                        {"blocks", g.blocks},
                        {"corrected_blocks", g.corrected_blocks},
                        {"coefficients", g.coefficients},
                        {"max_error", g.max_error}});
    j["groups"] = list;
  }
  if (ledger) j["ledger"] = ledger->to_json();
  if (!ratios.empty()) {
    json r;
    for (const auto& [name, report] : ratios) {
      r[name]["overall"] = report.overall;
      if (!report.per_variable.empty()) r[name]["per_variable"] = report.per_variable;
    }
    j["compression_ratio"] = r;
  }
  return j;
}

EvalReport evaluate(const Dataset& original, const Dataset& reconstructed, const Shape& block_shape,
                    std::optional<std::size_t> variable_axis, std::size_t histogram_bins) {
  const auto start = Clock::now();
  require(original.shape == reconstructed.shape, Errc::shape_mismatch, "datasets differ in shape");
  EvalReport r;
  r.nrmse = nrmse(original.values, reconstructed.values);
  if (variable_axis) r.per_variable_nrmse = nrmse_per_slice(original, reconstructed, *variable_axis);
  r.max_block_error = max_block_error(original, reconstructed, block_shape);
  r.histogram = relative_point_error_histogram(original.values, reconstructed.values, histogram_bins);
  r.timings["evaluate"] = seconds_since(start);
  return r;
}

// ---------------------------------------------------------------------------

CompressOutput finish_compress(const Dataset& ds, const AeStage& ae, const TrainedModels& models,
                               const PipelineConfig& config) {
  const auto start = Clock::now();
  const unsigned workers = config.effective_workers();
  const auto& norm = ae.prepared.norm;
  const Slicing slicing(ds.shape, config.group_axis);
  const Shape& gshape = slicing.slice_shape;
  const auto dim = static_cast<double>(element_count(config.gae_block));

  CompressOutput out;
  out.reconstruction = ae.reconstruction;
  archive::Archive& ar = out.archive;
  ar.sections.push_back({SectionKind::model_weights, archive::kSharedGroup, model_section(models, config.backend)});

  const auto hbae_stream = codec::huffman_encode(ae.hbae_codes.symbols);
  const auto bae_stream = codec::huffman_encode(ae.bae_codes.symbols);
  {
    ByteWriter tables;
    hbae_stream.table.serialize(tables);
    bae_stream.table.serialize(tables);
    ar.sections.push_back({SectionKind::tables, archive::kSharedGroup, pack(tables, config.backend)});
  }
  ar.sections.push_back({SectionKind::hbae_latents, archive::kSharedGroup, encode_stream(hbae_stream, config.backend)});
  ar.sections.push_back({SectionKind::bae_latents, archive::kSharedGroup, encode_stream(bae_stream, config.backend)});

  json groups = json::array();
  std::vector<BlockRows> originals(slicing.count());
  for (std::size_t g = 0; g < slicing.count(); ++g) {
    const auto orig = slicing.take(ds.values, g);
    const auto recon = slicing.take(ae.reconstruction.values, g);
    originals[g] = block_rows(gshape, orig, config.gae_block);
    const BlockRows r = block_rows(gshape, recon, config.gae_block);

    GroupSummary summary;
    summary.tau = config.tau * group_stats(norm, g).scale;
    summary.bin = config.bins.gae ? *config.bins.gae * group_stats(norm, g).scale : summary.tau / std::sqrt(dim);
    summary.blocks = static_cast<std::size_t>(r.rows());
    const GaeResult gae = guarantee_dataset<float>(originals[g], r, summary.tau, summary.bin, workers);
    summary.corrected_blocks = gae.report.corrected_blocks;
    summary.coefficients = gae.report.total_coefficients;
    slicing.put(out.reconstruction.values, g, unblock(gshape, config.gae_block, gae.corrected));

    const auto group = static_cast<std::uint16_t>(g);
    std::size_t basis_cols = 0;
    if (summary.coefficients == 0) {
      for (auto kind : {SectionKind::tables, SectionKind::pca_basis, SectionKind::gae_coefficients,
                        SectionKind::gae_indices})
        ar.sections.push_back({kind, group, {}});
    } else {
      std::vector<std::int64_t> symbols;
      std::vector<codec::IndexBitmask> prefixes;
      prefixes.reserve(gae.records.size());
      for (const auto& rec : gae.records) {
        prefixes.push_back(codec::encode_indices(codec::mask_from_indices(rec.indices, gae.basis.basis.rows())));
        symbols.insert(symbols.end(), rec.symbols.begin(), rec.symbols.end());
        if (!rec.empty()) basis_cols = std::max<std::size_t>(basis_cols, rec.indices.back() + 1);
      }
      const auto stream = codec::huffman_encode(symbols);
      ByteWriter table;
      stream.table.serialize(table);
      // Only the leading columns any block references are stored.
      ByteWriter basis;
      basis.put<std::uint32_t>(static_cast<std::uint32_t>(gae.basis.basis.rows()));
      basis.put<std::uint32_t>(static_cast<std::uint32_t>(basis_cols));
      for (Index i = 0; i < gae.basis.basis.rows(); ++i)
        for (Index c = 0; c < static_cast<Index>(basis_cols); ++c) basis.put<float>(static_cast<float>(gae.basis.basis(i, c)));
      ar.sections.push_back({SectionKind::tables, group, pack(table, config.backend)});
      ar.sections.push_back({SectionKind::pca_basis, group, pack(basis, config.backend)});
      ar.sections.push_back({SectionKind::gae_coefficients, group, encode_stream(stream, config.backend)});
      ar.sections.push_back(
          {SectionKind::gae_indices, group, codec::lossless_pack(codec::pack_prefixes(prefixes), config.backend)});
    }
    groups.push_back({{"tau", summary.tau},
                      {"bin", summary.bin},
                      {"blocks", summary.blocks},
                      {"coefficients", summary.coefficients},
                      {"basis_cols", basis_cols}});
    out.report.groups.push_back(summary);
  }

  json echo = to_json(config);
  echo.erase("workers");
  echo.erase("output");
  ar.manifest = {{"format", "gcdc"},
                 {"shape", ds.shape},
                 {"roles", [&] {
                    std::vector<std::string> r;
                    for (auto role : ds.roles) r.emplace_back(to_string(role));
                    return r;
                  }()},
                 {"ae_blocks", block_spec_json(config.ae_blocks)},
                 {"gae_block", config.gae_block},
                 {"normalization", norm_to_json(norm)},
                 {"bins", {{"hbae", config.bins.hbae}, {"bae", config.bins.bae}}},
                 {"tau", config.tau},
                 {"seed", config.seed},
                 {"backend", codec::to_string(config.backend)},
                 {"latents",
                  {{"hyperblocks", ae.prepared.hypers.size()},
                   {"hbae_dim", models.hbae.config().latent_dim},
                   {"blocks", ae.prepared.blocks.count()},
                   {"bae_dim", models.bae.config().latent_dim}}},
                 {"groups", groups},
                 {"config", echo}};
  out.bytes = archive::write_archive(ar);
  const double gae_seconds = seconds_since(start);

  // The decoder must reproduce x^G bit for bit, and every block of that
  // output must meet its bound; anything else is a bug, not a warning.
  const auto verify_start = Clock::now();
  const Dataset decoded = decompress(std::span<const std::uint8_t>(out.bytes), workers);
  require(decoded.values.size() == out.reconstruction.values.size() &&
              std::memcmp(decoded.values.data(), out.reconstruction.values.data(),
                          decoded.values.size() * sizeof(float)) == 0,
          Errc::guarantee_violated, "decoded archive differs from the compressor's reconstruction");
  for (std::size_t g = 0; g < slicing.count(); ++g) {
    const auto errors = block_errors(originals[g], block_rows(gshape, slicing.take(decoded.values, g), config.gae_block));
    auto& summary = out.report.groups[g];
    for (std::size_t i = 0; i < errors.size(); ++i) {
      summary.max_error = std::max(summary.max_error, errors[i]);
      require(errors[i] <= summary.tau, Errc::guarantee_violated,
              "group " + std::to_string(g) + " block " + std::to_string(i) + " error " + std::to_string(errors[i]) +
                  " exceeds tau " + std::to_string(summary.tau));
    }
  }
  const double verify_seconds = seconds_since(verify_start);

  auto report = evaluate(ds, out.reconstruction, config.gae_block, variable_axis(ds, config));
  report.groups = std::move(out.report.groups);
  report.tau = config.tau;
  report.ledger = archive::ledger_of(ar);
  require(report.ledger->file_size == out.bytes.size(), Errc::corrupt_payload, "size ledger does not match file size");
  const auto var_axis = variable_axis(ds, config);
  const std::size_t variables = var_axis ? ds.shape[*var_axis] : 1;
  const bool groups_are_variables = config.group_axis.has_value();
  const std::uint64_t original_bytes = ds.size() * sizeof(float);
  for (auto policy : {archive::RatioPolicy::include_models, archive::RatioPolicy::exclude_models,
                      archive::RatioPolicy::amortize_per_variable})
    report.ratios[archive::to_string(policy)] =
        archive::compression_ratio(original_bytes, *report.ledger, policy, variables, groups_are_variables);
  report.timings["autoencoders"] = ae.seconds;
  report.timings["gae_and_archive"] = gae_seconds;
  report.timings["verify"] = verify_seconds;
  out.report = std::move(report);
  return out;
}

CompressOutput compress(const Dataset& ds, const TrainedModels& models, const PipelineConfig& config) {
  return finish_compress(ds, run_autoencoders(ds, models, config), models, config);
}

Dataset decompress(const archive::Archive& ar, unsigned workers) {
  const json& m = ar.manifest;
  Dataset ds;
  BlockSpec spec;
  Shape gae_block;
  Normalization norm;
  double bin_h = 0.0, bin_b = 0.0;
  std::size_t hyper_count = 0, block_count = 0;
  std::vector<double> group_bins;
  try {
    require(m.at("format") == "gcdc", Errc::corrupt_payload, "manifest format tag");
    ds.shape = m.at("shape").get<Shape>();
    for (const auto& r : m.at("roles")) ds.roles.push_back(axis_role_from_string(r.get<std::string>()));
    spec.block_shape = m.at("ae_blocks").at("shape").get<Shape>();
    spec.hyper_k = m.at("ae_blocks").at("hyper_k").get<std::size_t>();
    spec.hyper_axis = m.at("ae_blocks").at("hyper_axis").get<std::size_t>();
    gae_block = m.at("gae_block").get<Shape>();
    norm = norm_from_json(m.at("normalization"));
    bin_h = m.at("bins").at("hbae").get<double>();
    bin_b = m.at("bins").at("bae").get<double>();
    hyper_count = m.at("latents").at("hyperblocks").get<std::size_t>();
    block_count = m.at("latents").at("blocks").get<std::size_t>();
    for (const auto& g : m.at("groups")) group_bins.push_back(g.at("bin").get<double>());
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_payload, std::string("manifest is incomplete: ") + e.what());
  }
  require(ds.roles.size() == ds.shape.size(), Errc::corrupt_payload, "manifest roles do not match shape");
  spec.validate_for(ds.shape);
  require(block_count == gcdc::block_count(ds.shape, spec.block_shape), Errc::corrupt_payload,
          "manifest block count does not match shape");

  const TrainedModels models = models_from_section(ar.find(SectionKind::model_weights).payload);

  // Autoencoder stage: identical calls to the compressor's.
  const auto tables_raw = codec::lossless_unpack(ar.find(SectionKind::tables).payload);
  ByteReader tables(tables_raw, Errc::corrupt_payload);
  const auto hbae_table = codec::HuffmanTable::deserialize(tables);
  const auto bae_table = codec::HuffmanTable::deserialize(tables);
  codec::QuantizedStream hbae_codes{bin_h, decode_stream(hbae_table, ar.find(SectionKind::hbae_latents).payload)};
  codec::QuantizedStream bae_codes{bin_b, decode_stream(bae_table, ar.find(SectionKind::bae_latents).payload)};

  BlockSet<float> layout;
  layout.data_shape = ds.shape;
  layout.block_shape = spec.block_shape;
  layout.grid = block_grid(ds.shape, spec.block_shape);
  const auto hypers = group_hyper(layout.grid, spec);
  require(hypers.size() == hyper_count, Errc::corrupt_payload, "manifest hyper-block count does not match shape");
  const Mat y = decode_hbae_blocks(
      models.hbae, dequantize_latents(hbae_codes, static_cast<Index>(hyper_count), models.hbae.config().latent_dim),
      hypers, block_count);
  const Mat xr = models.bae.decode(
      dequantize_latents(bae_codes, static_cast<Index>(block_count), models.bae.config().latent_dim), y);
  ds.values = ae_reconstruction(xr, layout, ds.roles, norm).values;

  // Guarantee stage, per group.
  const Slicing slicing(ds.shape, norm.group_axis);
  require(group_bins.size() == slicing.count(), Errc::corrupt_payload, "manifest group count does not match shape");
  const std::size_t dim = element_count(gae_block);
  for (std::size_t g = 0; g < slicing.count(); ++g) {
    const auto group = static_cast<std::uint16_t>(g);
    const auto& basis_payload = ar.find(SectionKind::pca_basis, group).payload;
    if (basis_payload.empty()) continue;  // no block needed correction

    const auto basis_raw = codec::lossless_unpack(basis_payload);
    ByteReader bin(basis_raw, Errc::corrupt_payload);
    const auto rows = bin.get<std::uint32_t>();
    const auto cols = bin.get<std::uint32_t>();
    require(rows == dim && cols <= dim, Errc::corrupt_payload, "PCA basis has the wrong dimensions");
    Eigen::MatrixXd basis(rows, cols);
    for (Index i = 0; i < basis.rows(); ++i)
      for (Index c = 0; c < basis.cols(); ++c) basis(i, c) = static_cast<double>(bin.get<float>());
    require(bin.done(), Errc::corrupt_payload, "trailing bytes after PCA basis");

    const auto table_raw = codec::lossless_unpack(ar.find(SectionKind::tables, group).payload);
    ByteReader tin(table_raw, Errc::corrupt_payload);
    const auto table = codec::HuffmanTable::deserialize(tin);
    const auto symbols = decode_stream(table, ar.find(SectionKind::gae_coefficients, group).payload);
    const auto prefixes =
        codec::unpack_prefixes(codec::lossless_unpack(ar.find(SectionKind::gae_indices, group).payload));

    const BlockRows r = block_rows(slicing.slice_shape, slicing.take(ds.values, g), gae_block);
    require(prefixes.size() == static_cast<std::size_t>(r.rows()), Errc::corrupt_payload,
            "index records do not match the block count");
    std::vector<std::vector<std::uint32_t>> indices(prefixes.size());
    std::vector<std::size_t> offsets(prefixes.size() + 1, 0);
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
      indices[i] = codec::indices_from_mask(codec::decode_indices(prefixes[i], dim));
      require(indices[i].empty() || indices[i].back() < cols, Errc::corrupt_payload,
              "correction refers to a basis column that was not stored");
      offsets[i + 1] = offsets[i] + indices[i].size();
    }
    require(offsets.back() == symbols.size(), Errc::corrupt_payload, "coefficient count does not match the indices");

    BlockRows corrected(r.rows(), r.cols());
    parallel_for(prefixes.size(), workers, [&](std::size_t i) {
      const auto row = static_cast<Index>(i);
      const std::vector<std::int64_t> syms(symbols.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
                                           symbols.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
      corrected.row(row) =
          apply_correction<float>(r.row(row).transpose(), basis, indices[i], syms, group_bins[g]).transpose();
    });
    slicing.put(ds.values, g, unblock(slicing.slice_shape, gae_block, corrected));
  }
  return ds;
}

Dataset decompress(std::span<const std::uint8_t> bytes, unsigned workers) {
  return decompress(archive::read_archive(bytes), workers);
}

// ---------------------------------------------------------------------------

std::vector<SweepPoint> sweep(const Dataset& ds, const TrainedModels& models, const PipelineConfig& config,
                              const std::vector<double>& taus) {
  const AeStage ae = run_autoencoders(ds, models, config);
  std::vector<SweepPoint> points;
  for (double tau : taus) {
    PipelineConfig c = config;
    c.tau = tau;
    c.resolve(ds.shape);
    const auto out = finish_compress(ds, ae, models, c);
    const auto& rep = out.report;
    SweepPoint p;
    p.tau = tau;
    p.nrmse = rep.nrmse;
    p.mean_variable_nrmse = rep.mean_variable_nrmse();
    for (const auto& g : rep.groups) {
      p.max_error_over_tau = std::max(p.max_error_over_tau, g.max_error / g.tau);
      p.coefficients += g.coefficients;
    }
    p.file_bytes = rep.ledger->file_size;
    p.counted_bytes = rep.ledger->total() - rep.ledger->bytes(SectionKind::model_weights);
    p.ratio_exclude_models = rep.ratios.at("exclude_models").overall;
    p.ratio_include_models = rep.ratios.at("include_models").overall;
    points.push_back(p);
  }
  return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out.precision(10);
  out << "tau,nrmse,mean_variable_nrmse,max_error_over_tau,counted_bytes,file_bytes,ratio_exclude_models,"
         "ratio_include_models,coefficients\n";
  for (const auto& p : points)
    out << p.tau << ',' << p.nrmse << ',' << p.mean_variable_nrmse << ',' << p.max_error_over_tau << ','
        << p.counted_bytes << ',' << p.file_bytes << ',' << p.ratio_exclude_models << ',' << p.ratio_include_models
        << ',' << p.coefficients << '\n';
  return out.str();
}

}  // namespace gcdc
