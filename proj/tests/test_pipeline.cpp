#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "gcdc/config.hpp"
#include "gcdc/metrics.hpp"
#include "gcdc/pipeline.hpp"
#include "gcdc/synthetic.hpp"
#include "oracles.hpp"

using namespace gcdc;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::io;
}

Dataset vec(std::vector<float> v) {
  const Shape s{v.size()};
  return {s, {AxisRole::space}, std::move(v)};
}

/// Small multivariable setup: 3 variables, per-variable GAE.
PipelineConfig small_config() {
  PipelineConfig c;
  c.synthetic = SyntheticSource{SyntheticKind::multivar, {3, 8, 8, 8}, 21};
  c.ae_blocks = BlockSpec{{3, 2, 4, 4}, 4, 1};
  c.gae_block = {1, 2, 4, 4};
  c.norm_mode = NormMode::mean0range1;
  c.group_axis = 0;
  c.hbae.embed_dim = 16;
  c.hbae.hidden = 32;
  c.hbae.latent_dim = 16;
  c.bae.latent_dim = 8;
  c.bae.hidden = 32;
  c.training = {.hbae_epochs = 30, .bae_epochs = 30, .batch = 2, .lr = 2e-3};
  c.tau = 0.05;
  c.seed = 3;
  c.workers = 2;
  return c;
}

struct Fixture {
  PipelineConfig config = small_config();
  Dataset data;
  TrainedModels models;

  Fixture() {
    data = load_dataset(config);
    config.resolve(data.shape);
    models = train_models(data, config);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("nrmse examples and oracle") {
  CHECK(nrmse(std::vector<float>{0, 1}, std::vector<float>{0, 1}) == 0.0);
  CHECK(nrmse(std::vector<float>{0, 1}, std::vector<float>{0.1f, 0.9f}) == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(code_of([] { nrmse(std::vector<float>{2, 2}, std::vector<float>{2, 3}); }) == Errc::zero_range);
  CHECK(code_of([] { nrmse(std::vector<float>{1, 2}, std::vector<float>{2}); }) == Errc::shape_mismatch);
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> a(100), b(100);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = static_cast<float>(rng.normal() * 5);
      b[i] = a[i] + static_cast<float>(rng.normal() * 0.1);
    }
    CHECK(nrmse(a, b) == doctest::Approx(oracle::nrmse(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("per-slice nrmse uses each slice's own range") {
  Dataset a{{2, 2}, {AxisRole::variable, AxisRole::space}, {0, 1, 0, 10}};
  Dataset b{{2, 2}, {AxisRole::variable, AxisRole::space}, {0.1f, 1, 0, 9}};
  const auto v = nrmse_per_slice(a, b, 0);
  CHECK(v[0] == doctest::Approx(std::sqrt(0.01 / 2) / 1.0).epsilon(1e-6));
  CHECK(v[1] == doctest::Approx(std::sqrt(1.0 / 2) / 10.0).epsilon(1e-6));
}

TEST_CASE("relative point error histogram") {
  SUBCASE("identical inputs put all mass in the first bin") {
    const std::vector<float> a = {0, 1, 2, 3};
    const auto h = relative_point_error_histogram(a, a, 5);
    CHECK(h.counts[0] == 4);
    CHECK(h.total() == 4);
  }
  SUBCASE("one point off by the range lands in the last bin") {
    const std::vector<float> a = {0, 1, 2, 4}, b = {0, 1, 2, 0};
    const auto h = relative_point_error_histogram(a, b, 10, 1.0);
    CHECK(h.counts[9] == 1);
    CHECK(h.counts[0] == 3);
  }
  SUBCASE("random data matches direct counting") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<float> a(500), b(500);
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<float>(rng.uniform(-3, 3));
        b[i] = a[i] + static_cast<float>(rng.normal() * 0.05);
      }
      const auto h = relative_point_error_histogram(a, b, 16);
      CHECK(h.total() == a.size());
      const double range = *std::max_element(a.begin(), a.end()) - *std::min_element(a.begin(), a.end());
      std::vector<double> rel;
      for (std::size_t i = 0; i < a.size(); ++i)
        rel.push_back(std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i])) / range);
      CHECK(h.counts == oracle::count_into(rel, h.edges));
    }
  }
}

TEST_CASE("synthetic data is deterministic per seed") {
  for (auto kind : {SyntheticKind::smooth, SyntheticKind::multivar, SyntheticKind::histogram}) {
    const auto a = generate_synthetic(kind, {4, 6, 8}, 5);
    const auto b = generate_synthetic(kind, {4, 6, 8}, 5);
    const auto c = generate_synthetic(kind, {4, 6, 8}, 6);
    CHECK(same_bits(a.values, b.values));
    CHECK_FALSE(same_bits(a.values, c.values));
  }
  CHECK(generate_synthetic(SyntheticKind::multivar, {2, 3, 4, 4}, 0).roles ==
        std::vector<AxisRole>{AxisRole::variable, AxisRole::time, AxisRole::space, AxisRole::space});
  CHECK(synthetic_kind_from_string("histogram") == SyntheticKind::histogram);
}

TEST_CASE("multivar variables are strongly correlated") {
  const auto ds = generate_synthetic(SyntheticKind::multivar, {8, 10, 16, 16}, 9);
  const std::size_t n = ds.size() / 8;
  auto corr = [&](std::size_t p, std::size_t q) {
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) ma += ds.values[p * n + i], mb += ds.values[q * n + i];
    ma /= n, mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = ds.values[p * n + i] - ma, b = ds.values[q * n + i] - mb;
      sab += a * b, saa += a * a, sbb += b * b;
    }
    return sab / std::sqrt(saa * sbb);
  };
  for (std::size_t p = 0; p < 8; ++p)
    for (std::size_t q = p + 1; q < 8; ++q) CHECK(corr(p, q) > 0.9);
}

TEST_CASE("histogram data is nonnegative") {
  const auto ds = generate_synthetic(SyntheticKind::histogram, {5, 20, 20}, 2);
  CHECK(*std::min_element(ds.values.begin(), ds.values.end()) >= 0.0f);
  CHECK(*std::max_element(ds.values.begin(), ds.values.end()) > 0.1f);
}

TEST_CASE("config parses, round-trips and rejects unknown keys") {
  const auto j = to_json(small_config());
  const auto c = config_from_json(j);
  CHECK(to_json(c) == j);
  CHECK(c.group_axis == std::optional<std::size_t>(0));
  CHECK(c.ae_blocks.hyper_k == 4);

  auto bad = j;
  bad["tua"] = 0.1;
  CHECK(code_of([&] { config_from_json(bad); }) == Errc::invalid_argument);
  bad = j;
  bad["bins"]["hbea"] = 0.1;
  CHECK(code_of([&] { config_from_json(bad); }) == Errc::invalid_argument);
  bad = j;
  bad["tau"] = "small";
  CHECK(code_of([&] { config_from_json(bad); }) == Errc::invalid_argument);

  auto cfg = small_config();
  cfg.tau = 0;
  CHECK(code_of([&] { cfg.resolve({3, 8, 8, 8}); }) == Errc::invalid_argument);
  cfg = small_config();
  cfg.gae_block = {3, 2, 4, 4};
  CHECK(code_of([&] { cfg.resolve({3, 8, 8, 8}); }) == Errc::invalid_spec);
  cfg = small_config();
  cfg.ae_blocks.block_shape = {3, 2, 4};
  CHECK(code_of([&] { cfg.resolve({3, 8, 8, 8}); }) == Errc::rank_mismatch);
}

TEST_CASE("compress meets the bound per variable and decodes bit-exactly") {
  const auto& f = fixture();
  const auto out = compress(f.data, f.models, f.config);
  const auto& rep = out.report;
  REQUIRE(rep.groups.size() == 3);
  const double dim = static_cast<double>(element_count(f.config.gae_block));
  const auto per_var = nrmse_per_slice(f.data, out.reconstruction, 0);
  for (std::size_t g = 0; g < 3; ++g) {
    CHECK(rep.groups[g].max_error <= rep.groups[g].tau);
    // Every block error <= tau_g bounds the variable's RMSE by tau_g / sqrt(D).
    const std::size_t n = f.data.size() / 3;
    const auto lo = *std::min_element(f.data.values.begin() + g * n, f.data.values.begin() + (g + 1) * n);
    const auto hi = *std::max_element(f.data.values.begin() + g * n, f.data.values.begin() + (g + 1) * n);
    CHECK(per_var[g] <= rep.groups[g].tau / ((hi - lo) * std::sqrt(dim)));
  }

  const Dataset decoded = decompress(std::span<const std::uint8_t>(out.bytes));
  CHECK(decoded.shape == f.data.shape);
  CHECK(decoded.roles == f.data.roles);
  CHECK(same_bits(decoded.values, out.reconstruction.values));
  CHECK(std::fabs(nrmse(f.data.values, decoded.values) - rep.nrmse) <= 1e-12);
  CHECK(rep.ledger->file_size == out.bytes.size());
  CHECK(rep.ratios.at("exclude_models").overall > rep.ratios.at("include_models").overall);
  CHECK(rep.ratios.at("amortize_per_variable").per_variable.size() == 3);
  CHECK(rep.to_json().contains("compression_ratio"));
}

TEST_CASE("identical config and seed give identical archives") {
  const auto& f = fixture();
  const auto a = compress(f.data, f.models, f.config);
  const auto retrained = train_models(f.data, f.config);
  const auto b = compress(f.data, retrained, f.config);
  CHECK(a.bytes == b.bytes);

  auto other = f.config;
  other.workers = 1;
  CHECK(compress(f.data, f.models, other).bytes == a.bytes);
}

TEST_CASE("saved checkpoints reproduce the archive") {
  const auto& f = fixture();
  const auto dir = std::filesystem::temp_directory_path() / "gcdc_test_models";
  save_models(f.models, dir);
  const auto loaded = load_models(dir);
  CHECK(compress(f.data, loaded, f.config).bytes == compress(f.data, f.models, f.config).bytes);
  std::filesystem::remove_all(dir);
}

TEST_CASE("smaller tau stores more coefficients and compresses less") {
  const auto& f = fixture();
  auto c = f.config;
  const auto a = compress(f.data, f.models, c);
  c.tau /= 2;
  const auto b = compress(f.data, f.models, c);
  std::size_t ca = 0, cb = 0;
  for (const auto& g : a.report.groups) ca += g.coefficients;
  for (const auto& g : b.report.groups) cb += g.coefficients;
  CHECK(cb >= ca);
  CHECK(b.report.ratios.at("exclude_models").overall <= a.report.ratios.at("exclude_models").overall);
}

TEST_CASE("a loose tau stores no corrections and leaves empty sections") {
  const auto& f = fixture();
  auto c = f.config;
  c.tau = 100.0;
  const auto out = compress(f.data, f.models, c);
  for (const auto& g : out.report.groups) CHECK(g.coefficients == 0);
  CHECK(out.archive.find(archive::SectionKind::gae_coefficients, 0).payload.empty());
  CHECK(same_bits(decompress(std::span<const std::uint8_t>(out.bytes)).values, out.reconstruction.values));
}

TEST_CASE("corrupted archives fail to decompress") {
  const auto& f = fixture();
  auto bytes = compress(f.data, f.models, f.config).bytes;
  bytes[bytes.size() - 10] ^= 0x40;
  CHECK(code_of([&] { decompress(std::span<const std::uint8_t>(bytes)); }) == Errc::checksum_fail);
}

TEST_CASE("evaluating a dataset against itself") {
  const auto& f = fixture();
  const auto rep = evaluate(f.data, f.data, f.config.gae_block, 0);
  CHECK(rep.nrmse == 0.0);
  CHECK(rep.max_block_error == 0.0);
  CHECK_FALSE(rep.to_json().contains("compression_ratio"));
  CHECK(rep.histogram.counts[0] == f.data.size());
}

TEST_CASE("edge blocks, global normalization and no group axis") {
  PipelineConfig c;
  c.synthetic = SyntheticSource{SyntheticKind::smooth, {6, 10, 10}, 4};
  c.ae_blocks = BlockSpec{{2, 4, 4}, 2, 0};  // 3 blocks along time: one padded hyper-block slot
  c.gae_block = {2, 3, 3};
  c.norm_mode = NormMode::zscore;
  c.hbae = {.embed_dim = 8, .hidden = 16, .latent_dim = 8};
  c.bae = {.latent_dim = 4, .hidden = 16};
  c.training = {.hbae_epochs = 10, .bae_epochs = 10, .batch = 4, .lr = 2e-3};
  c.tau = 0.02;
  c.workers = 1;
  const Dataset ds = load_dataset(c);
  c.resolve(ds.shape);
  const auto models = train_models(ds, c);
  const auto out = compress(ds, models, c);
  REQUIRE(out.report.groups.size() == 1);
  CHECK(out.report.groups[0].max_error <= out.report.groups[0].tau);
  CHECK(max_block_error(ds, out.reconstruction, c.gae_block) <= out.report.groups[0].tau);
  CHECK(same_bits(decompress(std::span<const std::uint8_t>(out.bytes)).values, out.reconstruction.values));
}

TEST_CASE("sweep produces one monotone row per tau") {
  const auto& f = fixture();
  const auto points = sweep(f.data, f.models, f.config, {0.1, 0.05, 0.02});
  REQUIRE(points.size() == 3);
  for (std::size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].nrmse <= points[i - 1].nrmse);
    CHECK(points[i].counted_bytes >= points[i - 1].counted_bytes);
  }
  for (const auto& p : points) CHECK(p.max_error_over_tau <= 1.0);
  const auto csv = sweep_csv(points);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("the autoencoders compress smooth data more than 20x below 1% NRMSE") {
  PipelineConfig c;
  c.synthetic = SyntheticSource{SyntheticKind::smooth, {20, 32, 32}, 1};
  c.ae_blocks = BlockSpec{{5, 8, 8}, 4, 0};
  c.norm_mode = NormMode::mean0range1;
  c.hbae = {.embed_dim = 32, .hidden = 64, .latent_dim = 32};
  c.bae = {.latent_dim = 4, .hidden = 32};
  c.training = {.hbae_epochs = 400, .bae_epochs = 200, .batch = 4, .lr = 1e-3};
  c.tau = 0.1;
  c.workers = 2;
  const Dataset ds = load_dataset(c);
  c.resolve(ds.shape);
  const auto models = train_models(ds, c);
  const auto ae = run_autoencoders(ds, models, c);
  const auto out = compress(ds, models, c);
  // Autoencoder stage only: both latent streams and their Huffman tables.
  const auto& ar = out.archive;
  const std::size_t ae_bytes = ar.find(archive::SectionKind::hbae_latents).payload.size() +
                               ar.find(archive::SectionKind::bae_latents).payload.size() +
                               ar.find(archive::SectionKind::tables).payload.size();
  const double ratio = static_cast<double>(ds.size() * sizeof(float)) / static_cast<double>(ae_bytes);
  const double err = nrmse(ds.values, ae.reconstruction.values);
  MESSAGE("autoencoder nrmse " << err << ", ratio " << ratio);
  CHECK(err < 1e-2);
  CHECK(ratio > 20.0);
}
