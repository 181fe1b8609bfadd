#pragma once

// Decomposed discrete policies: M action dimensions, each discretized into
// N values on [-1, 1]. A state maps to an M x N matrix D whose rows are read
// either as logits or as decomposed Q-values (Boltzmann policy).

#include <cstddef>
#include <span>
#include <vector>

#include "sdpc/nn.hpp"

namespace sdpc {

/// Endpoint-inclusive uniform grid: value(n) = -1 + 2n/(N-1), n = 0..N-1.
class ActionGrid {
 public:
  ActionGrid(std::size_t dims, std::size_t bins);

  std::size_t dims() const { return dims_; }
  std::size_t bins() const { return bins_; }
  double value(std::size_t n) const { return values_.at(n); }
  const std::vector<double>& values() const { return values_; }

  /// Closest grid index; inputs outside [-1, 1] map to the nearest end.
  std::size_t nearest_index(double v) const;

  std::vector<double> to_action(std::span<const std::size_t> indices) const;

 private:
  std::size_t dims_;
  std::size_t bins_;
  std::vector<double> values_;
};

enum class Interpretation { kLogits, kDecomposedQ };

struct PolicyMatrix {
  std::size_t dims = 0;
  std::size_t bins = 0;
  std::vector<double> values;  // [dims x bins] row-major
  Interpretation interpretation = Interpretation::kLogits;

  std::span<const double> row(std::size_t m) const { return {values.data() + m * bins, bins}; }
};

struct DecomposedDistribution {
  std::size_t dims = 0;
  std::size_t bins = 0;
  std::vector<double> probs;  // [dims x bins] row-major, rows sum to 1

  std::span<const double> row(std::size_t m) const { return {probs.data() + m * bins, bins}; }
  double prob(std::size_t m, std::size_t n) const { return probs[m * bins + n]; }
};

/// Max-subtracted softmax of one row.
void softmax_row(std::span<const double> logits, std::span<double> out);

/// Row-wise softmax. Requires the logits interpretation.
DecomposedDistribution policy_from_logits(const PolicyMatrix& d);

/// Row-wise softmax of D / alpha. Requires the decomposed-Q interpretation.
DecomposedDistribution boltzmann_policy(const PolicyMatrix& d, double alpha);

struct SampledAction {
  std::vector<double> action;
  double p_joint = 1.0;
  std::vector<std::size_t> indices;
};

/// Independent per-dimension categorical draw.
SampledAction sample_action(const DecomposedDistribution& dist, const ActionGrid& grid, Rng& rng);

/// Draw of the index only for one row.
std::size_t sample_index(std::span<const double> row, Rng& rng);

/// Per-dimension argmax, ties to the lowest index.
std::vector<std::size_t> greedy_indices(const DecomposedDistribution& dist);
std::vector<double> greedy_action(const DecomposedDistribution& dist, const ActionGrid& grid);

/// -sum p ln p with 0 ln 0 = 0.
double raw_entropy(std::span<const double> row);

/// -sum p ln(p N / 2): the entropy of the piecewise-constant density that puts
/// mass p_n on a cell of width 2/N. Uniform -> ln 2, one-hot -> -ln(N/2).
double normalized_entropy(std::span<const double> row);

struct EntropyTerms {
  std::vector<double> per_dim;
  double total = 0.0;
};

EntropyTerms normalized_entropy(const DecomposedDistribution& dist);

/// sum_m ln pi_m(indices[m]). Throws InputError for an out-of-range index.
double joint_log_prob(const DecomposedDistribution& dist, std::span<const std::size_t> indices);

}  // namespace sdpc
