#pragma once

// Run configuration, metrics files, and the four subcommands behind the
// `sdpc` executable.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdpc/agent.hpp"

namespace sdpc::cli {

struct RunConfig {
  Algorithm algorithm = Algorithm::kSdac;
  std::string env;
  std::uint64_t seed = 0;
  AgentConfig agent = AgentConfig::defaults(Algorithm::kSdac);
  std::size_t buffer_capacity = 1000000;
  std::size_t total_steps = 30000;
  std::size_t warmup_steps = 1000;
  std::size_t eval_every = 1000;
  std::size_t eval_episodes = 10;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  std::optional<double> stop_at_return;

  /// UsageError naming the offending field.
  void validate() const;

  TrainOptions train_options() const;

  bool operator==(const RunConfig&) const;
};

nlohmann::json to_json(const RunConfig& c);

/// Missing keys keep their defaults; the target entropy default follows the
/// algorithm. Unknown keys and ill-typed values raise UsageError.
RunConfig run_config_from_json(const nlohmann::json& j);

/// $SDPC_RUN_ROOT, or "runs" when unset or empty.
std::filesystem::path run_root();

/// runs/<timestamp>-<algo>-<env>-<seed> under run_root(); the env id is
/// reduced to [A-Za-z0-9_.-].
std::filesystem::path default_run_dir(const RunConfig& c);

extern const char* const kMetricsHeader;
std::string format_metrics_row(const MetricsRow& row);

/// Writes metrics.csv (header plus rows) and timing.csv (step, seconds).
void write_metrics(const std::filesystem::path& dir, const std::vector<MetricsRow>& rows);

/// Resolved config.json, metrics, checkpoints/step-<k>.ckpt and
/// checkpoints/final.ckpt in `dir`. Returns the final checkpoint path.
std::filesystem::path run_train(const RunConfig& config, const std::filesystem::path& dir,
                                std::ostream& log);

/// Greedy evaluation of a checkpoint; env defaults to the one it was trained on.
EvalResult run_eval(const std::filesystem::path& checkpoint, std::optional<std::string> env,
                    std::size_t episodes, std::uint64_t seed, std::ostream& out);

/// Prints the check table; true when every line passes.
bool run_oracle_checks(std::size_t trials, std::uint64_t seed, std::ostream& out);

struct AblationCell {
  std::string name;
  RunConfig config;
};

/// Axis "N", "target_entropy", "multistep", "importance" or "target_alpha".
std::vector<AblationCell> ablation_cells(const RunConfig& base, const std::string& axis);

/// One run_train per cell into dir/<cell name>.
void run_ablation(const RunConfig& base, const std::string& axis, const std::filesystem::path& dir,
                  std::ostream& log);

/// Entry point of the executable. Exit status 0 on success, 1 on a failed
/// check or runtime error, 2 on usage errors.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace sdpc::cli
