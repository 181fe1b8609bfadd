#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdpc/error.hpp"
#include "sdpc/policy.hpp"

namespace sdpc {
namespace {

void check_shape(const PolicyMatrix& d) {
  if (d.dims == 0 || d.bins == 0 || d.values.size() != d.dims * d.bins) {
    throw ShapeError("PolicyMatrix values do not match dims x bins");
  }
  for (double v : d.values) {
    if (!std::isfinite(v)) throw NumericError("PolicyMatrix has a non-finite entry");
  }
}

DecomposedDistribution softmax_rows(std::size_t dims, std::size_t bins,
                                    std::span<const double> values) {
  DecomposedDistribution dist{dims, bins, std::vector<double>(dims * bins)};
  for (std::size_t m = 0; m < dims; ++m) {
    softmax_row(values.subspan(m * bins, bins), {dist.probs.data() + m * bins, bins});
  }
  return dist;
}

}  // namespace

void softmax_row(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::ranges::max_element(logits);
  double sum = 0.0;
  for (std::size_t n = 0; n < logits.size(); ++n) {
    out[n] = std::exp(logits[n] - mx);
    sum += out[n];
  }
  for (std::size_t n = 0; n < logits.size(); ++n) out[n] /= sum;
}

DecomposedDistribution policy_from_logits(const PolicyMatrix& d) {
  check_shape(d);
  if (d.interpretation != Interpretation::kLogits) {
    throw ParameterError("policy_from_logits needs a logits PolicyMatrix");
  }
  return softmax_rows(d.dims, d.bins, d.values);
}

DecomposedDistribution boltzmann_policy(const PolicyMatrix& d, double alpha) {
  if (!(alpha > 0.0)) throw ParameterError("Boltzmann temperature must be > 0");
  check_shape(d);
  if (d.interpretation != Interpretation::kDecomposedQ) {
    throw ParameterError("boltzmann_policy needs a decomposed-Q PolicyMatrix");
  }
  std::vector<double> scaled(d.values.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = d.values[i] / alpha;
  return softmax_rows(d.dims, d.bins, scaled);
}

std::size_t sample_index(std::span<const double> row, Rng& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng);
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t n = 0; n < row.size(); ++n) {
    if (row[n] > 0.0) last_positive = n;
    cum += row[n];
    if (u < cum && row[n] > 0.0) return n;
  }
  return last_positive;
}

SampledAction sample_action(const DecomposedDistribution& dist, const ActionGrid& grid, Rng& rng) {
  if (dist.dims != grid.dims() || dist.bins != grid.bins()) {
    throw ShapeError("distribution and grid disagree on M x N");
  }
  SampledAction s;
  s.indices.resize(dist.dims);
  for (std::size_t m = 0; m < dist.dims; ++m) {
    s.indices[m] = sample_index(dist.row(m), rng);
    s.p_joint *= dist.prob(m, s.indices[m]);
  }
  s.action = grid.to_action(s.indices);
  return s;
}

std::vector<std::size_t> greedy_indices(const DecomposedDistribution& dist) {
  std::vector<std::size_t> idx(dist.dims);
  for (std::size_t m = 0; m < dist.dims; ++m) {
    const auto row = dist.row(m);
    // max_element returns the first maximum.
    idx[m] = static_cast<std::size_t>(std::ranges::max_element(row) - row.begin());
  }
  return idx;
}

std::vector<double> greedy_action(const DecomposedDistribution& dist, const ActionGrid& grid) {
  return grid.to_action(greedy_indices(dist));
}

double raw_entropy(std::span<const double> row) {
  double h = 0.0;
  for (double p : row) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double normalized_entropy(std::span<const double> row) {
  const double half_n = static_cast<double>(row.size()) / 2.0;
  double h = 0.0;
  for (double p : row) {
    if (p > 0.0) h -= p * std::log(p * half_n);
  }
  return h;
}

EntropyTerms normalized_entropy(const DecomposedDistribution& dist) {
  EntropyTerms e;
  e.per_dim.resize(dist.dims);
  for (std::size_t m = 0; m < dist.dims; ++m) {
    e.per_dim[m] = normalized_entropy(dist.row(m));
    e.total += e.per_dim[m];
  }
  return e;
}

double joint_log_prob(const DecomposedDistribution& dist, std::span<const std::size_t> indices) {
  if (indices.size() != dist.dims) throw ShapeError("index vector length != dims");
  double lp = 0.0;
  for (std::size_t m = 0; m < dist.dims; ++m) {
    if (indices[m] >= dist.bins) throw InputError("action index out of range");
    lp += std::log(dist.prob(m, indices[m]));
  }
  return lp;
}

}  // namespace sdpc
