#include <cmath>

#include "sdpc/envs.hpp"

namespace sdpc {

double TwoArmedBandit::reward(double a) {
  const double left = 0.8 * std::exp(-(a + 0.5) * (a + 0.5) / 0.08);
  const double right = 1.0 * std::exp(-(a - 0.5) * (a - 0.5) / 0.08);
  return left + right;
}

std::vector<double> TwoArmedBandit::do_reset(std::uint64_t) { return {1.0}; }

StepResult TwoArmedBandit::do_step(std::span<const double> clipped) {
  return {{1.0}, reward(clipped[0]), true, false};
}

}  // namespace sdpc
