#include <algorithm>
#include <cmath>

#include "sdpc/agent.hpp"
#include "sdpc/error.hpp"

namespace sdpc {

TemperatureState::TemperatureState(double initial_log_alpha, double min_log, double max_log,
                                   double target_entropy, double lr)
    : min_log_(min_log), max_log_(max_log), target_entropy_(target_entropy), opt_(1, {lr}) {
  if (!(min_log < max_log)) throw ParameterError("log alpha bounds must satisfy min < max");
  set_log_alpha(initial_log_alpha);
  alpha_target_ = alpha();
}

double TemperatureState::alpha() const { return std::exp(log_alpha_); }

void TemperatureState::set_log_alpha(double v) {
  if (!std::isfinite(v)) throw NumericError("non-finite log alpha");
  log_alpha_ = std::clamp(v, min_log_, max_log_);
}

TemperatureState::Loss TemperatureState::loss(std::span<const double> per_dim_entropies) const {
  if (per_dim_entropies.empty()) return {};
  double gap = 0.0;
  for (double h : per_dim_entropies) gap += h - target_entropy_;
  gap /= static_cast<double>(per_dim_entropies.size());
  const double a = alpha();
  return {a * gap, a * gap};
}

void TemperatureState::step(double grad_log_alpha) {
  double p = log_alpha_;
  const double g = grad_log_alpha;
  opt_.step(std::span<double>(&p, 1), std::span<const double>(&g, 1));
  set_log_alpha(p);
}

void TemperatureState::relax_target(double tau) {
  alpha_target_ = std::lerp(alpha_target_, alpha(), tau);
}

}  // namespace sdpc
