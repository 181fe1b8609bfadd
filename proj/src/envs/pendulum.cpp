#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdpc/envs.hpp"

namespace sdpc {
namespace {

double wrap_angle(double th) {
  const double two_pi = 2.0 * std::numbers::pi;
  return std::fmod(std::fmod(th + std::numbers::pi, two_pi) + two_pi, two_pi) - std::numbers::pi;
}

}  // namespace

std::vector<double> Pendulum::observe() const {
  return {std::cos(theta_), std::sin(theta_), theta_dot_};
}

std::vector<double> Pendulum::set_state(double theta, double theta_dot) {
  reset(0);
  theta_ = theta;
  theta_dot_ = theta_dot;
  return observe();
}

std::vector<double> Pendulum::do_reset(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  theta_ = angle(rng);
  theta_dot_ = speed(rng);
  return observe();
}

StepResult Pendulum::do_step(std::span<const double> clipped) {
  const double torque = kMaxTorque * clipped[0];
  const double th = wrap_angle(theta_);
  const double cost = th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * torque * torque;

  const double accel = 3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) +
                       3.0 / (kMass * kLength * kLength) * torque;
  theta_dot_ = std::clamp(theta_dot_ + accel * kDt, -kMaxSpeed, kMaxSpeed);
  theta_ = theta_ + theta_dot_ * kDt;
  return {observe(), -cost, false, false};
}

}  // namespace sdpc
