#include <Eigen/Core>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "upm/cli.hpp"
#include "upm/io.hpp"

namespace upm::cli {

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* value = std::getenv("UPM_SEED");
  if (!value || !*value) return std::nullopt;
  return std::strtoull(value, nullptr, 10);
}

void apply_thread_env() {
  const char* value = std::getenv("UPM_THREADS");
  if (!value || !*value) return;
  const int threads = std::atoi(value);
  if (threads > 0) Eigen::setNbThreads(threads);
}

int finish(const RunReport& report, const std::string& report_path) {
  const std::string csv = report.to_csv();
  std::cout << csv;
  if (!report_path.empty()) atomic_write(report_path, csv);
  return report.invariant_failures > 0 ? 2 : 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  apply_thread_env();
  const std::optional<std::uint64_t> seed_override = env_seed();

  CLI::App app{"Universe partial graph matching toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_path, ckpt_path, history_path,
      report_path;

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--config", config_path, "Generator config (JSON)")
      ->required();
  gen->add_option("--out", out_path, "Output dataset directory")->required();
  gen->add_option("--report", report_path, "Also write the report CSV here");

  CLI::App* train = app.add_subcommand("train", "Train a universe metric");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--config", config_path, "Training config (JSON)")
      ->required();
  train->add_option("--out", ckpt_path, "Checkpoint output path")->required();
  train->add_option("--history", history_path, "Per-epoch history CSV");
  train->add_option("--report", report_path, "Also write the report CSV here");

  EvalOptions eval_options;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--data", data_dir, "Dataset directory")->required();
  eval->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
  eval->add_option("--mode", eval_options.mode,
                   "pairs | online | cluster | gradcheck");
  eval->add_option("--pairs", eval_options.pairs,
                   "Sampled pair count (pairs/gradcheck)");
  eval->add_option("--k", eval_options.k, "Cluster count (cluster mode)");
  eval->add_option("--per-class", eval_options.per_class,
                   "Graphs per class (cluster mode)");
  eval->add_option("--session", eval_options.session_size,
                   "Session size (online mode)");
  std::uint64_t eval_seed = 0;
  CLI::Option* seed_opt =
      eval->add_option("--seed", eval_seed, "Sampling seed");
  eval->add_option("--report", report_path, "Also write the report CSV here");

  CLI::App* inspect =
      app.add_subcommand("inspect", "Dump checkpoint metadata");
  inspect->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      RunReport report = cmd_gen(config_path, out_path, seed_override);
      return finish(report, report_path);
    }
    if (train->parsed()) {
      RunReport report = cmd_train(data_dir, config_path, ckpt_path,
                                   history_path, seed_override);
      return finish(report, report_path);
    }
    if (eval->parsed()) {
      if (seed_opt->count() > 0) eval_options.seed = eval_seed;
      if (seed_override) eval_options.seed = *seed_override;
      RunReport report = cmd_eval(data_dir, ckpt_path, eval_options);
      return finish(report, report_path);
    }
    RunReport report = cmd_inspect(ckpt_path);
    return finish(report, report_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace upm::cli
