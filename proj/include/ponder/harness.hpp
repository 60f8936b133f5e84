#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ponder/config.hpp"
#include "ponder/training.hpp"

namespace ponder {

// Unresolved CLI-level settings; only fields the user actually passed are
// engaged. Precedence: flags > config file > profile defaults.
struct ConfigOverrides {
  std::optional<std::string> task, cell, wrapper, profile, optim;
  std::optional<int> rho, act_max_steps, hidden, batch, eval_batches;
  std::optional<double> tau, epsilon, lr, clip;
  std::optional<uint64_t> seed;
  std::optional<long> budget, eval_interval;
  std::optional<bool> no_clip, run_past_solve, parity_count_nonzeros;
};

// Throws UsageError on unknown names or missing requirements
// (wrapper=repeat without rho, wrapper=act without tau).
ExperimentConfig resolve_config(const ConfigOverrides& flags,
                                const std::optional<std::string>& config_file);

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

std::string default_run_name(const ExperimentConfig& cfg);

// Shortest decimal rendering that round-trips the double.
std::string format_double(double v);
std::string metrics_to_json_line(const MetricsRecord& rec);

struct RunResult {
  ExperimentConfig cfg;
  TrainReport report;
  std::filesystem::path dir;
};

// Executes one training run and writes config.json, metrics.jsonl,
// report.json and params.json under dir.
RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                         const TrainHooks& extra_hooks = {});

TrainReport report_from_json_file(const std::filesystem::path& file, ExperimentConfig* cfg_out);

// Table-style summary, one row per report, sorted by task, wrapper,
// hyperparameter. Columns: model, wrapper, hyperparameter, solved,
// training_steps, average_repetitions.
std::string export_summary(const std::vector<RunResult>& results);

// Default output root: PONDERBENCH_OUT or ./out.
std::filesystem::path default_out_root();

// Full CLI: run | sweep | report | plot | selftest | dump.
// Exit codes: 0 success, 1 config/usage error, 2 diverged without solving.
int run_cli(const std::vector<std::string>& args);

// Gradient checks and oracle equivalences at reduced scale; returns true when
// everything passes, printing one line per check.
bool selftest(std::ostream& os);

}  // namespace ponder
