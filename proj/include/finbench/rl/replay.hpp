#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "finbench/util/rng.hpp"

namespace finbench::rl {

// Fixed-capacity ring buffer of transitions with flat state storage.
// `action` holds either a discrete index (size 1) or a continuous vector.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int state_dim, int action_dim);

  void push(std::span<const double> state, std::span<const double> action, double reward,
            std::span<const double> next_state, bool done);

  std::size_t size() const { return size_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

  void sample_indices(int batch, Rng& rng, std::vector<int>& out) const;

  std::span<const double> state(int i) const {
    return {states_.data() + static_cast<std::size_t>(i) * state_dim_,
            static_cast<std::size_t>(state_dim_)};
  }
  std::span<const double> action(int i) const {
    return {actions_.data() + static_cast<std::size_t>(i) * action_dim_,
            static_cast<std::size_t>(action_dim_)};
  }
  std::span<const double> next_state(int i) const {
    return {next_states_.data() + static_cast<std::size_t>(i) * state_dim_,
            static_cast<std::size_t>(state_dim_)};
  }
  double reward(int i) const { return rewards_[static_cast<std::size_t>(i)]; }
  bool done(int i) const { return dones_[static_cast<std::size_t>(i)] != 0; }

 private:
  int capacity_, state_dim_, action_dim_;
  std::size_t size_ = 0, head_ = 0;
  std::vector<double> states_, actions_, next_states_, rewards_;
  std::vector<std::uint8_t> dones_;
};

}  // namespace finbench::rl
