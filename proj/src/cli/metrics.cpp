#include <cstdio>
#include <fstream>

#include "sdpc/cli.hpp"
#include "sdpc/error.hpp"

namespace sdpc::cli {

const char* const kMetricsHeader = "step,eval_mean,eval_std,alpha,entropy,critic_loss,policy_loss";

std::string format_metrics_row(const MetricsRow& row) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", row.step, row.eval_mean,
                row.eval_std, row.alpha, row.entropy, row.critic_loss, row.policy_loss);
  return buf;
}

void write_metrics(const std::filesystem::path& dir, const std::vector<MetricsRow>& rows) {
  std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
  std::ofstream timing(dir / "timing.csv", std::ios::binary);
  if (!metrics || !timing) throw InputError("cannot write metrics into " + dir.string());
  metrics << kMetricsHeader << '\n';
  timing << "step,wall_seconds\n";
  for (const auto& r : rows) {
    metrics << format_metrics_row(r) << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.6f", r.step, r.wall_seconds);
    timing << buf << '\n';
  }
}

}  // namespace sdpc::cli
