#include <cmath>

#include "sdpc/error.hpp"
#include "sdpc/policy.hpp"

namespace sdpc {

ActionGrid::ActionGrid(std::size_t dims, std::size_t bins) : dims_(dims), bins_(bins) {
  if (dims == 0) throw ParameterError("ActionGrid needs at least one dimension");
  if (bins < 2) throw ParameterError("ActionGrid needs N >= 2");
  values_.resize(bins);
  const double denom = static_cast<double>(bins - 1);
  for (std::size_t n = 0; n < bins; ++n) {
    values_[n] = -1.0 + 2.0 * static_cast<double>(n) / denom;
  }
  values_.back() = 1.0;
}

std::size_t ActionGrid::nearest_index(double v) const {
  if (std::isnan(v)) throw InputError("nearest_index of NaN");
  if (v <= -1.0) return 0;
  if (v >= 1.0) return bins_ - 1;
  const double pos = (v + 1.0) * static_cast<double>(bins_ - 1) / 2.0;
  const auto n = static_cast<std::size_t>(std::lround(pos));
  return n < bins_ ? n : bins_ - 1;
}

std::vector<double> ActionGrid::to_action(std::span<const std::size_t> indices) const {
  if (indices.size() != dims_) throw ShapeError("index vector length != action dims");
  std::vector<double> a(dims_);
  for (std::size_t m = 0; m < dims_; ++m) {
    if (indices[m] >= bins_) throw InputError("grid index out of range");
    a[m] = values_[indices[m]];
  }
  return a;
}

}  // namespace sdpc
