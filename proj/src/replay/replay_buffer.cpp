#include "sdpc/replay.hpp"

#include "sdpc/error.hpp"

namespace sdpc {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ParameterError("replay capacity must be >= 1");
  slots_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (!(t.p_old > 0.0 && t.p_old <= 1.0)) throw InputError("p_old must lie in (0, 1]");
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(t));
    ++size_;
    return;
  }
  slots_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw InputError("replay index out of range");
  return slots_[(head_ + i) % capacity_];
}

std::vector<const Transition*> ReplayBuffer::sample_batch(std::size_t batch, Rng& rng) const {
  if (size_ < batch || size_ == 0) throw StateError("replay buffer holds fewer items than the batch");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<const Transition*> out(batch);
  for (auto& p : out) p = &at(pick(rng));
  return out;
}

bool ReplayBuffer::try_window(std::size_t start, std::size_t width, Window& out) const {
  out.clear();
  out.push_back(&at(start));
  while (out.size() < width) {
    const Transition& last = *out.back();
    if (last.terminal) return true;
    const std::size_t next = start + out.size();
    if (next >= size_) return false;
    const Transition& t = at(next);
    if (t.episode_id != last.episode_id || t.step_id != last.step_id + 1) return false;
    out.push_back(&t);
  }
  return true;
}

std::vector<Window> ReplayBuffer::sample_windows(std::size_t batch, std::size_t width,
                                                 Rng& rng) const {
  if (width == 0) throw ParameterError("window width must be >= 1");
  if (size_ < width) throw StateError("replay buffer holds fewer items than the window width");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<Window> out(batch);
  const std::size_t max_attempts = 1000 * (batch + 1);
  std::size_t attempts = 0;
  for (auto& w : out) {
    while (!try_window(pick(rng), width, w)) {
      if (++attempts > max_attempts) throw StateError("no valid replay window found");
    }
  }
  return out;
}

}  // namespace sdpc
