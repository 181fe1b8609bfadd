#include <cmath>

#include "sdpc/error.hpp"
#include "sdpc/kernels.hpp"
#include "sdpc/nn.hpp"

namespace sdpc {

Adam::Adam(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
  if (!(config.learning_rate >= 0.0)) throw ParameterError("Adam learning rate must be >= 0");
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("Adam step: parameter/gradient size does not match optimizer state");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericError("Adam step: non-finite gradient");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bias1 = 1.0 - std::pow(config_.beta1, t);
  const double bias2 = 1.0 - std::pow(config_.beta2, t);
  kernels::active().adam_update(m_.size(), params.data(), grads.data(), m_.data(), v_.data(),
                                config_.learning_rate, config_.beta1, config_.beta2,
                                config_.epsilon, bias1, bias2);
}

}  // namespace sdpc
