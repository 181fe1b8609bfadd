#pragma once

// Minimal reverse-mode MLP engine: ReLU hidden layers, identity output,
// flat parameter storage, and an Adam optimizer over flat spans.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sdpc/matrix.hpp"

namespace sdpc {

using Rng = std::mt19937_64;

class Mlp;

/// Forward intermediates of one batch, consumed by exactly one backward pass.
class GradTape {
 public:
  enum class State { kEmpty, kRecorded, kConsumed };

  State state() const { return state_; }
  void reset();

  /// Input of layer l (activations(0) is the batch itself).
  const Matrix& activations(std::size_t layer) const { return activations_.at(layer); }

 private:
  friend class Mlp;
  State state_ = State::kEmpty;
  const Mlp* owner_ = nullptr;
  std::vector<Matrix> activations_;
};

/// Fully connected network. Layer l maps widths[l] -> widths[l+1]; the
/// weights of layer l are stored [in x out] row-major, followed by its bias.
class Mlp {
 public:
  Mlp() = default;

  /// All parameters zero.
  explicit Mlp(std::vector<std::size_t> widths);

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  static Mlp random(std::vector<std::size_t> widths, Rng& rng);

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t input_width() const { return widths_.front(); }
  std::size_t output_width() const { return widths_.back(); }
  std::size_t num_layers() const { return widths_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  Matrix forward(const Matrix& batch) const;

  /// Forward pass that records intermediates on `tape` (previous contents dropped).
  Matrix forward(const Matrix& batch, GradTape& tape) const;

  /// Gradient of sum(out .* out_grad) w.r.t. all parameters, flat and aligned
  /// with parameters(). Consumes the tape.
  std::vector<double> backward(GradTape& tape, const Matrix& out_grad) const;

  bool operator==(const Mlp&) const = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
  Matrix run(const Matrix& batch, GradTape* tape) const;

  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t parameter_count, AdamConfig config);

  /// One bias-corrected update. Throws NumericError on a non-finite gradient
  /// (parameters and moments are left untouched in that case).
  void step(std::span<double> params, std::span<const double> grads);

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t steps_ = 0;
};

/// target <- tau * online + (1 - tau) * target, coordinate-wise and bounded
/// between the two operands.
void soft_update(std::span<double> target, std::span<const double> online, double tau);

}  // namespace sdpc
