// gcdc: train, compress, decompress, evaluate, synthesize and sweep.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gcdc/config.hpp"
#include "gcdc/io.hpp"
#include "gcdc/pipeline.hpp"
#include "gcdc/synthetic.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Overrides {
  std::string config;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> policy;
  std::string models;
};

gcdc::PipelineConfig effective_config(const Overrides& o) {
  gcdc::PipelineConfig c = o.config.empty() ? gcdc::PipelineConfig{} : gcdc::load_config(o.config);
  if (o.tau) c.tau = *o.tau;
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.policy) c.policy = gcdc::archive::ratio_policy_from_string(*o.policy);
  if (!o.models.empty()) c.output.models = o.models;
  return c;
}

std::string loss_csv(const gcdc::TrainLog& log) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,loss\n0," << log.initial_loss << '\n';
  for (std::size_t e = 0; e < log.epoch_losses.size(); ++e) out << e + 1 << ',' << log.epoch_losses[e] << '\n';
  return out.str();
}

gcdc::TrainedModels obtain_models(const gcdc::Dataset& ds, const gcdc::PipelineConfig& c) {
  if (fs::exists(c.output.models / "hbae.ckpt") && fs::exists(c.output.models / "bae.ckpt")) {
    std::cerr << "loading models from " << c.output.models << '\n';
    return gcdc::load_models(c.output.models);
  }
  std::cerr << "no checkpoints in " << c.output.models << ", training\n";
  return gcdc::train_models(ds, c);
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_synth(const std::string& kind, const std::vector<std::size_t>& shape, std::uint64_t seed,
              const std::string& output) {
  const auto ds = gcdc::generate_synthetic(gcdc::synthetic_kind_from_string(kind), shape, seed);
  gcdc::io::write_raw(ds, output);
  print_json({{"output", output}, {"header", output + ".hdr"}, {"values", ds.size()}});
  return 0;
}

int cmd_train(const Overrides& o) {
  auto c = effective_config(o);
  const auto ds = gcdc::load_dataset(c);
  c.resolve(ds.shape);
  const auto models = gcdc::train_models(ds, c, [](const std::string& stage, int epoch, double loss) {
    if ((epoch + 1) % 25 == 0) std::cerr << stage << " epoch " << epoch + 1 << " loss " << loss << '\n';
  });
  gcdc::save_models(models, c.output.models);
  gcdc::io::write_text(c.output.models / "hbae_loss.csv", loss_csv(models.hbae_log));
  gcdc::io::write_text(c.output.models / "bae_loss.csv", loss_csv(models.bae_log));
  print_json({{"models", c.output.models.string()},
              {"hbae_parameters", models.hbae.parameter_count()},
              {"bae_parameters", models.bae.parameter_count()},
              {"hbae_final_loss", models.hbae_log.epoch_losses.empty() ? models.hbae_log.initial_loss
                                                                        : models.hbae_log.epoch_losses.back()},
              {"bae_final_loss", models.bae_log.epoch_losses.empty() ? models.bae_log.initial_loss
                                                                      : models.bae_log.epoch_losses.back()}});
  return 0;
}

int cmd_compress(const Overrides& o) {
  auto c = effective_config(o);
  const auto ds = gcdc::load_dataset(c);
  c.resolve(ds.shape);
  const auto models = obtain_models(ds, c);
  const auto out = gcdc::compress(ds, models, c);
  gcdc::io::write_file(c.output.archive, out.bytes);
  json report = out.report.to_json();
  report["archive"] = c.output.archive.string();
  report["policy"] = gcdc::archive::to_string(c.policy);
  report["ratio"] = out.report.ratios.at(gcdc::archive::to_string(c.policy)).overall;
  gcdc::io::write_text(c.output.report, report.dump(2) + "\n");
  print_json(report);
  return 0;
}

int cmd_decompress(const std::string& input, const std::string& output, const Overrides& o) {
  const unsigned workers = o.workers.value_or(gcdc::default_workers());
  const auto ds = gcdc::decompress(gcdc::io::read_file(input), workers);
  gcdc::io::write_raw(ds, output);
  print_json({{"output", output}, {"values", ds.size()}});
  return 0;
}

int cmd_eval(const std::string& original, const std::string& reconstructed, std::vector<std::size_t> block,
             std::optional<std::size_t> var_axis, std::size_t bins, const Overrides& o) {
  const auto a = gcdc::io::read_raw(original);
  const auto b = gcdc::io::read_raw(reconstructed);
  if (!o.config.empty()) {
    auto c = effective_config(o);
    c.resolve(a.shape);
    if (block.empty()) block = c.gae_block;
    if (!var_axis) var_axis = gcdc::variable_axis(a, c);
  }
  if (block.empty()) block = a.shape;
  print_json(gcdc::evaluate(a, b, block, var_axis, bins).to_json());
  return 0;
}

int cmd_sweep(const Overrides& o, const std::vector<double>& taus) {
  auto c = effective_config(o);
  const auto ds = gcdc::load_dataset(c);
  c.resolve(ds.shape);
  const auto models = obtain_models(ds, c);
  const auto points = gcdc::sweep(ds, models, c, taus.empty() ? c.sweep_taus : taus);
  const auto csv = gcdc::sweep_csv(points);
  gcdc::io::write_text(c.output.sweep, csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gcdc: error-bounded lossy compression with hierarchical autoencoders"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--tau", o.tau, "per-block l2 bound (normalized units)");
    sub->add_option("--seed", o.seed, "seed for initialization and shuffling");
    sub->add_option("--workers", o.workers, "worker threads (default: GCDC_WORKERS or logical CPUs)");
    sub->add_option("--policy", o.policy, "ratio policy: include_models, exclude_models, amortize_per_variable");
    sub->add_option("--models", o.models, "checkpoint directory");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string kind = "smooth", synth_out;
  std::vector<std::size_t> shape;
  std::uint64_t synth_seed = 0;
  synth->add_option("--kind", kind, "smooth, multivar or histogram");
  synth->add_option("--shape", shape, "array shape")->required()->delimiter(',');
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("-o,--output", synth_out, "raw output path")->required();

  auto* train = app.add_subcommand("train", "train the autoencoders");
  add_common(train);
  auto* comp = app.add_subcommand("compress", "compress to an archive and report");
  add_common(comp);

  auto* decomp = app.add_subcommand("decompress", "decode an archive to a raw file");
  std::string archive_in, decomp_out;
  decomp->add_option("archive", archive_in, "archive path")->required()->check(CLI::ExistingFile);
  decomp->add_option("-o,--output", decomp_out, "raw output path")->required();
  decomp->add_option("--workers", o.workers, "worker threads");

  auto* eval = app.add_subcommand("eval", "compare two raw datasets");
  std::string eval_a, eval_b;
  std::vector<std::size_t> eval_block;
  std::optional<std::size_t> eval_axis;
  std::size_t eval_bins = 20;
  eval->add_option("original", eval_a, "original raw file")->required()->check(CLI::ExistingFile);
  eval->add_option("reconstructed", eval_b, "reconstructed raw file")->required()->check(CLI::ExistingFile);
  eval->add_option("--block", eval_block, "block shape for the max block error")->delimiter(',');
  eval->add_option("--variable-axis", eval_axis, "axis for per-variable NRMSE");
  eval->add_option("--bins", eval_bins, "histogram bins");
  add_common(eval);

  auto* sw = app.add_subcommand("sweep", "ratio vs NRMSE over several tau values, as CSV");
  std::vector<double> taus;
  sw->add_option("--taus", taus, "tau values")->delimiter(',');
  add_common(sw);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(kind, shape, synth_seed, synth_out);
    if (*train) return cmd_train(o);
    if (*comp) return cmd_compress(o);
    if (*decomp) return cmd_decompress(archive_in, decomp_out, o);
    if (*eval) return cmd_eval(eval_a, eval_b, eval_block, eval_axis, eval_bins, o);
    if (*sw) return cmd_sweep(o, taus);
  } catch (const gcdc::Error& e) {
    std::cerr << json{{"error", gcdc::to_string(e.code())}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << '\n';
    return 3;
  }
  return 0;
}
