#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace upm::cli {

/// Flat machine-readable report: one row per reported quantity, schema
/// "metric,value,context". Every number in the metric rows comes from a
/// metrics-module call; config rows echo the inputs so runs self-describe.
struct RunReport {
  static constexpr int kSchemaVersion = 1;

  std::string command;
  std::uint64_t seed = 0;
  int invariant_failures = 0;

  struct Row {
    std::string metric, value, context;
  };
  std::vector<Row> rows;

  void add(const std::string& metric, const std::string& value,
           const std::string& context = "");
  void add(const std::string& metric, double value,
           const std::string& context = "");
  void add(const std::string& metric, long value,
           const std::string& context = "");
  std::string to_csv() const;
};

struct EvalOptions {
  std::string mode = "pairs";  // pairs | online | cluster | gradcheck
  int pairs = 100;             // sampled pairs (pairs/gradcheck modes)
  int k = 0;                   // cluster count; 0 = dataset class count
  int per_class = 8;           // graphs sampled per class in cluster mode
  int session_size = 15;       // graphs admitted in online mode
  std::optional<std::uint64_t> seed;
};

RunReport cmd_gen(const std::filesystem::path& config_path,
                  const std::filesystem::path& out_dir,
                  std::optional<std::uint64_t> seed_override = {});

RunReport cmd_train(const std::filesystem::path& dataset_dir,
                    const std::filesystem::path& config_path,
                    const std::filesystem::path& checkpoint_out,
                    const std::filesystem::path& history_csv = {},
                    std::optional<std::uint64_t> seed_override = {});

RunReport cmd_eval(const std::filesystem::path& dataset_dir,
                   const std::filesystem::path& checkpoint_path,
                   const EvalOptions& options);

RunReport cmd_inspect(const std::filesystem::path& checkpoint_path);

/// Full argv-level entry point (used by the binary): parses arguments, honors
/// the UPM_SEED / UPM_THREADS environment overrides, prints the report CSV to
/// stdout and returns the process exit code (nonzero when any invariant
/// check inside a command failed).
int run_cli(int argc, const char* const* argv);

}  // namespace upm::cli
