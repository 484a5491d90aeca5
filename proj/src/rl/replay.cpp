#include "finbench/rl/replay.hpp"

#include <algorithm>

#include "finbench/util/error.hpp"

namespace finbench::rl {

ReplayBuffer::ReplayBuffer(int capacity, int state_dim, int action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity < 1) fail(Errc::InvalidArgument, "replay capacity must be >= 1");
  states_.resize(static_cast<std::size_t>(capacity) * state_dim);
  actions_.resize(static_cast<std::size_t>(capacity) * action_dim);
  next_states_.resize(static_cast<std::size_t>(capacity) * state_dim);
  rewards_.resize(capacity);
  dones_.resize(capacity);
}

void ReplayBuffer::push(std::span<const double> state, std::span<const double> action,
                        double reward, std::span<const double> next_state, bool done) {
  if (state.size() != static_cast<std::size_t>(state_dim_) ||
      next_state.size() != static_cast<std::size_t>(state_dim_) ||
      action.size() != static_cast<std::size_t>(action_dim_)) {
    fail(Errc::DimensionMismatch, "replay push shape mismatch");
  }
  std::copy(state.begin(), state.end(), states_.begin() + head_ * state_dim_);
  std::copy(action.begin(), action.end(), actions_.begin() + head_ * action_dim_);
  std::copy(next_state.begin(), next_state.end(), next_states_.begin() + head_ * state_dim_);
  rewards_[head_] = reward;
  dones_[head_] = done ? 1 : 0;
  head_ = (head_ + 1) % static_cast<std::size_t>(capacity_);
  size_ = std::min(size_ + 1, static_cast<std::size_t>(capacity_));
}

void ReplayBuffer::sample_indices(int batch, Rng& rng, std::vector<int>& out) const {
  if (size_ == 0) fail(Errc::InvalidArgument, "sampling from empty replay buffer");
  out.resize(batch);
  for (int i = 0; i < batch; ++i) out[i] = rng.uniform_int(static_cast<int>(size_));
}

}  // namespace finbench::rl
