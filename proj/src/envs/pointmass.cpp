#include "sdpc/envs.hpp"
#include "sdpc/error.hpp"

namespace sdpc {

PointMass::PointMass(std::size_t dims) : dims_(dims), x_(dims, 0.0), v_(dims, 0.0) {
  if (dims == 0) throw ParameterError("point mass needs at least one dimension");
}

std::vector<double> PointMass::observe() const {
  std::vector<double> s(x_);
  s.insert(s.end(), v_.begin(), v_.end());
  return s;
}

std::vector<double> PointMass::set_state(std::span<const double> position,
                                         std::span<const double> velocity) {
  if (position.size() != dims_ || velocity.size() != dims_) {
    throw ShapeError("point mass state has wrong dimension");
  }
  reset(0);
  x_.assign(position.begin(), position.end());
  v_.assign(velocity.begin(), velocity.end());
  return observe();
}

std::vector<double> PointMass::do_reset(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (double& x : x_) x = uni(rng);
  std::fill(v_.begin(), v_.end(), 0.0);
  return observe();
}

StepResult PointMass::do_step(std::span<const double> clipped) {
  double cost = 0.0;
  for (std::size_t m = 0; m < dims_; ++m) {
    cost += x_[m] * x_[m] + 0.01 * clipped[m] * clipped[m];
  }
  for (std::size_t m = 0; m < dims_; ++m) {
    x_[m] += v_[m] * kDt;
    v_[m] += clipped[m] * kDt - kDamping * v_[m];
  }
  return {observe(), -cost, false, false};
}

}  // namespace sdpc
