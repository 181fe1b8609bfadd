#pragma once

// FIFO experience storage with consecutive-window sampling.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sdpc/nn.hpp"

namespace sdpc {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  std::vector<std::size_t> indices;
  double p_old = 1.0;  // behavior probability of `indices`, in (0, 1]
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
  bool truncated = false;
  std::uint64_t episode_id = 0;
  std::uint64_t step_id = 0;
};

/// Consecutive transitions of one episode, oldest first.
using Window = std::vector<const Transition*>;

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  /// Evicts the oldest item when full. p_old outside (0, 1] raises InputError.
  void push(Transition t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  /// i = 0 is the oldest stored item.
  const Transition& at(std::size_t i) const;

  /// Uniform with replacement. Throws StateError when size() < batch.
  std::vector<const Transition*> sample_batch(std::size_t batch, Rng& rng) const;

  /// Windows of `width` consecutive steps from uniformly drawn start indices.
  /// A window is cut short only where its episode terminates; starts that
  /// cannot yield such a window are redrawn.
  std::vector<Window> sample_windows(std::size_t batch, std::size_t width, Rng& rng) const;

 private:
  bool try_window(std::size_t start, std::size_t width, Window& out) const;

  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest item
  std::size_t size_ = 0;
  std::vector<Transition> slots_;
};

}  // namespace sdpc
