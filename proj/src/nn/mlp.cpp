#include <algorithm>
#include <cmath>
#include <string>

#include "sdpc/error.hpp"
#include "sdpc/kernels.hpp"
#include "sdpc/nn.hpp"

namespace sdpc {

void GradTape::reset() {
  state_ = State::kEmpty;
  owner_ = nullptr;
  activations_.clear();
}

Mlp::Mlp(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ShapeError("Mlp needs at least an input and an output width");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] == 0 || widths_[l + 1] == 0) throw ShapeError("Mlp layer width must be >= 1");
    offsets_.push_back(total);
    total += (widths_[l] + 1) * widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::random(std::vector<std::size_t> widths, Rng& rng) {
  Mlp net(std::move(widths));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.widths_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : net.weights(l)) w = dist(rng);
  }
  return net;
}

std::span<double> Mlp::weights(std::size_t layer) {
  return {params_.data() + weight_offset(layer), widths_[layer] * widths_[layer + 1]};
}
std::span<const double> Mlp::weights(std::size_t layer) const {
  return {params_.data() + weight_offset(layer), widths_[layer] * widths_[layer + 1]};
}
std::span<double> Mlp::bias(std::size_t layer) {
  return {params_.data() + weight_offset(layer) + widths_[layer] * widths_[layer + 1],
          widths_[layer + 1]};
}
std::span<const double> Mlp::bias(std::size_t layer) const {
  return {params_.data() + weight_offset(layer) + widths_[layer] * widths_[layer + 1],
          widths_[layer + 1]};
}

Matrix Mlp::forward(const Matrix& batch) const { return run(batch, nullptr); }

Matrix Mlp::forward(const Matrix& batch, GradTape& tape) const { return run(batch, &tape); }

Matrix Mlp::run(const Matrix& batch, GradTape* tape) const {
  if (widths_.empty()) throw StateError("Mlp is uninitialized");
  if (batch.cols() != input_width()) {
    throw ShapeError("Mlp input width " + std::to_string(batch.cols()) + ", expected " +
                     std::to_string(input_width()));
  }
  if (batch.rows() == 0) throw ShapeError("Mlp batch must have at least one row");

  const auto& k = kernels::active();
  if (tape != nullptr) {
    tape->reset();
    tape->owner_ = this;
    tape->activations_.reserve(num_layers());
    tape->activations_.push_back(batch);
  }
  Matrix current = batch;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    Matrix next(batch.rows(), out);
    const auto b = bias(l);
    for (std::size_t r = 0; r < batch.rows(); ++r) std::ranges::copy(b, next.row(r).begin());
    k.gemm_acc(batch.rows(), in, out, current.data().data(), weights(l).data(),
               next.data().data());
    if (l + 1 < num_layers()) {
      for (double& v : next.data()) v = v > 0.0 ? v : 0.0;
      if (tape != nullptr) tape->activations_.push_back(next);
    }
    current = std::move(next);
  }
  if (tape != nullptr) tape->state_ = GradTape::State::kRecorded;
  return current;
}

std::vector<double> Mlp::backward(GradTape& tape, const Matrix& out_grad) const {
  if (tape.state_ == GradTape::State::kConsumed) {
    throw StateError("GradTape already consumed by a backward pass");
  }
  if (tape.state_ != GradTape::State::kRecorded || tape.owner_ != this) {
    throw StateError("GradTape holds no forward pass of this network");
  }
  const std::size_t rows = tape.activations_.front().rows();
  if (out_grad.rows() != rows || out_grad.cols() != output_width()) {
    throw ShapeError("out_grad shape does not match the recorded forward output");
  }

  const auto& k = kernels::active();
  std::vector<double> grads(params_.size(), 0.0);
  Matrix delta = out_grad;
  for (std::size_t l = num_layers(); l-- > 0;) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const Matrix& input = tape.activations_[l];
    double* dw = grads.data() + weight_offset(l);
    double* db = dw + in * out;
    k.gemm_at_acc(rows, in, out, input.data().data(), delta.data().data(), dw);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto dr = delta.row(r);
      for (std::size_t o = 0; o < out; ++o) db[o] += dr[o];
    }
    if (l == 0) break;
    Matrix prev(rows, in);
    k.gemm_bt(rows, in, out, delta.data().data(), weights(l).data(), prev.data().data());
    // ReLU derivative from the stored post-activation values.
    const auto act = input.data();
    auto pd = prev.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      if (!(act[i] > 0.0)) pd[i] = 0.0;
    }
    delta = std::move(prev);
  }
  tape.state_ = GradTape::State::kConsumed;
  return grads;
}

void soft_update(std::span<double> target, std::span<const double> online, double tau) {
  if (target.size() != online.size()) throw ShapeError("soft_update size mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ParameterError("soft_update tau must lie in [0, 1]");
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = std::lerp(target[i], online[i], tau);
}

}  // namespace sdpc
