#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "gcdc/io.hpp"
#include "gcdc/random.hpp"
#include "gcdc/tensor.hpp"

using namespace gcdc;

namespace {

Shape random_shape(Rng& rng, std::size_t rank, std::size_t max_extent) {
  Shape s(rank);
  for (auto& n : s) n = 1 + rng.below(max_extent);
  return s;
}

std::vector<float> iota_values(std::size_t n) {
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(i) + 0.5f;
  return v;
}

Dataset make_dataset(const Shape& shape, std::vector<float> values) {
  return {shape, std::vector<AxisRole>(shape.size(), AxisRole::space), std::move(values)};
}

}  // namespace

TEST_CASE("block count is the product of per-axis ceilings") {
  CHECK(block_count({58, 5, 4, 4}, {58, 5, 4, 4}) == 1);
  CHECK(block_count({10, 10}, {3, 4}) == 4 * 3);
  CHECK(block_grid({7, 1, 9}, {2, 1, 9}) == Shape{4, 1, 1});
}

TEST_CASE("partition places every element at its block coordinate") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rank = 1 + rng.below(4);
    const Shape shape = random_shape(rng, rank, 9);
    Shape block(rank);
    for (std::size_t d = 0; d < rank; ++d) block[d] = 1 + rng.below(shape[d]);
    const auto values = iota_values(element_count(shape));
    const auto set = partition<float>(shape, std::span<const float>(values), block);

    REQUIRE(set.count() == block_count(shape, block));
    REQUIRE(set.block_dim() == element_count(block));
    const Shape grid = block_grid(shape, block);
    // Oracle: walk every element coordinate directly.
    std::size_t filled = 0;
    for (std::size_t flat = 0; flat < values.size(); ++flat) {
      std::size_t rem = flat;
      Shape coord(rank);
      for (std::size_t d = rank; d-- > 0;) coord[d] = rem % shape[d], rem /= shape[d];
      std::size_t bid = 0, off = 0;
      for (std::size_t d = 0; d < rank; ++d) {
        bid = bid * grid[d] + coord[d] / block[d];
        off = off * block[d] + coord[d] % block[d];
      }
      CHECK(set.rows(static_cast<Eigen::Index>(bid), static_cast<Eigen::Index>(off)) == values[flat]);
      ++filled;
    }
    // Padding is zero and exactly the entries the valid mask excludes.
    std::size_t valid = 0;
    for (std::size_t b = 0; b < set.count(); ++b) {
      const auto mask = set.valid_mask(b);
      for (std::size_t j = 0; j < mask.size(); ++j) {
        if (mask[j]) ++valid;
        else CHECK(set.rows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) == 0.0f);
      }
    }
    CHECK(valid == filled);
  }
}

TEST_CASE("reassemble inverts partition exactly") {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rank = 1 + rng.below(5);
    const Shape shape = random_shape(rng, rank, 7);
    Shape block(rank);
    for (std::size_t d = 0; d < rank; ++d) block[d] = 1 + rng.below(shape[d]);
    std::vector<double> values(element_count(shape));
    for (auto& v : values) v = rng.normal();
    const auto set = partition<double>(shape, std::span<const double>(values), block);
    CHECK(reassemble(set) == values);
  }
}

TEST_CASE("reassemble rejects an incomplete block set") {
  const auto values = iota_values(16);
  auto set = partition<float>({4, 4}, std::span<const float>(values), {2, 2});
  set.rows.conservativeResize(3, Eigen::NoChange);
  CHECK_THROWS_AS(reassemble(set), Error);
  try {
    reassemble(set);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_block);
  }
}

TEST_CASE("block spec validation") {
  CHECK_NOTHROW(BlockSpec{{2, 2}, 1, 0}.validate_for({4, 4}));
  auto code_of = [](const BlockSpec& s, const Shape& shape) {
    try {
      s.validate_for(shape);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io;
  };
  CHECK(code_of({{2}, 1, 0}, {4, 4}) == Errc::rank_mismatch);
  CHECK(code_of({{5, 2}, 1, 0}, {4, 4}) == Errc::invalid_spec);
  CHECK(code_of({{2, 2}, 0, 0}, {4, 4}) == Errc::invalid_spec);
  CHECK(code_of({{2, 2}, 2, 3}, {4, 4}) == Errc::invalid_spec);
}

TEST_CASE("hyper-blocks cover every block with k consecutive blocks along the axis") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rank = 1 + rng.below(3);
    const Shape grid = random_shape(rng, rank, 6);
    BlockSpec spec;
    spec.block_shape = Shape(rank, 1);
    spec.hyper_axis = rng.below(rank);
    spec.hyper_k = 1 + rng.below(5);
    const auto hypers = group_hyper(grid, spec);
    const Shape strides = row_major_strides(grid);
    std::multiset<std::size_t> real;
    for (const auto& hb : hypers) {
      REQUIRE(hb.block_ids.size() == spec.hyper_k);
      const std::size_t real_count = spec.hyper_k - hb.pad;
      for (std::size_t j = 0; j + 1 < real_count; ++j)
        CHECK(hb.block_ids[j + 1] == hb.block_ids[j] + strides[spec.hyper_axis]);
      for (std::size_t j = real_count; j < spec.hyper_k; ++j) CHECK(hb.block_ids[j] == hb.block_ids[real_count - 1]);
      real.insert(hb.block_ids.begin(), hb.block_ids.begin() + static_cast<std::ptrdiff_t>(real_count));
    }
    CHECK(real.size() == element_count(grid));
    CHECK(std::set<std::size_t>(real.begin(), real.end()).size() == element_count(grid));
    for (std::size_t h = 1; h < hypers.size(); ++h) CHECK(hypers[h - 1].block_ids[0] < hypers[h].block_ids[0]);
  }
}

TEST_CASE("hyper-block padding repeats the last block") {
  BlockSpec spec{{1}, 4, 0};
  const auto hypers = group_hyper({6}, spec);
  REQUIRE(hypers.size() == 2);
  CHECK(hypers[0].pad == 0);
  CHECK(hypers[1].block_ids == std::vector<std::size_t>{4, 5, 5, 5});
  CHECK(hypers[1].pad == 2);
}

TEST_CASE("per-group normalization to mean 0 and range 1 inverts") {
  Rng rng(14);
  Dataset ds = make_dataset({3, 50}, {});
  ds.roles[0] = AxisRole::variable;
  for (std::size_t v = 0; v < 3; ++v)
    for (int i = 0; i < 50; ++i) ds.values.push_back(static_cast<float>(100.0 * v + (v + 1) * rng.normal()));
  auto [norm_ds, norm] = normalize(ds, NormMode::mean0range1, 0);
  REQUIRE(norm.groups.size() == 3);
  for (std::size_t v = 0; v < 3; ++v) {
    double sum = 0.0, lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < 50; ++i) {
      const double x = norm_ds.values[v * 50 + i];
      sum += x, lo = std::min(lo, x), hi = std::max(hi, x);
    }
    CHECK(std::fabs(sum / 50.0) < 1e-6);
    CHECK(hi - lo == doctest::Approx(1.0).epsilon(1e-6));
  }
  const Dataset back = denormalize(norm_ds, norm);
  for (std::size_t i = 0; i < ds.size(); ++i)
    CHECK(back.values[i] == doctest::Approx(ds.values[i]).epsilon(1e-5));
}

TEST_CASE("z-score normalization and constant groups") {
  Dataset ds = make_dataset({2, 4}, {1, 2, 3, 4, 5, 5, 5, 5});
  auto [z, norm] = normalize(ds, NormMode::zscore, 0);
  CHECK(norm.groups[0].scale == doctest::Approx(std::sqrt(1.25)));
  CHECK_FALSE(norm.groups[0].constant);
  CHECK(norm.groups[1].constant);
  CHECK(norm.groups[1].scale == 1.0);
  CHECK(z.values[4] == 0.0f);
  const auto back = denormalize(z, norm).values;
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(back[i] == doctest::Approx(ds.values[i]).epsilon(1e-6));
}

TEST_CASE("dataset validation errors") {
  auto code_of = [](const Dataset& ds) {
    try {
      ds.validate();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io;
  };
  CHECK(code_of(make_dataset({2, 2}, {1, 2, 3})) == Errc::shape_mismatch);
  CHECK(code_of(make_dataset({2}, {1, NAN})) == Errc::non_finite);
  Dataset bad_roles = make_dataset({2}, {1, 2});
  bad_roles.roles.push_back(AxisRole::time);
  CHECK(code_of(bad_roles) == Errc::rank_mismatch);
}

TEST_CASE("raw files round-trip through the sidecar header") {
  const auto dir = std::filesystem::temp_directory_path() / "gcdc_test_io";
  std::filesystem::create_directories(dir);
  Dataset ds = make_dataset({2, 3, 4}, iota_values(24));
  ds.roles = {AxisRole::variable, AxisRole::time, AxisRole::space};
  io::write_raw(ds, dir / "a.raw");
  const Dataset back = io::read_raw(dir / "a.raw");
  CHECK(back.shape == ds.shape);
  CHECK(back.roles == ds.roles);
  CHECK(back.values == ds.values);

  const auto header = io::parse_header(io::format_header({ds.shape, ds.roles}));
  CHECK(header.shape == ds.shape);
  CHECK_THROWS_AS(io::parse_header("shape 2 2\nroles space space\ndtype float64\n"), Error);
  std::filesystem::remove_all(dir);
}
