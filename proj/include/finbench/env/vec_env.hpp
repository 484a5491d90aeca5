#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "finbench/env/market_env.hpp"
#include "finbench/util/rng.hpp"
#include "finbench/util/thread_pool.hpp"

namespace finbench::env {

// Structure-of-arrays rollout storage, preallocated N x T (x D) with no
// per-step allocation. Row j telescopes: sum of rewards = v_T^j - v_0^j.
struct TrajectoryBatch {
  int n = 0;
  int horizon = 0;
  int state_dim = 0;
  int action_dim = 0;
  std::vector<double> states;        // n * T * D_s
  std::vector<double> actions;       // n * T * D_a
  std::vector<double> rewards;       // n * T
  std::vector<std::uint8_t> dones;   // n * T
  std::vector<double> log_probs;     // n * T (zeros for deterministic policies)
  std::vector<int> lengths;          // valid steps per row

  void resize(int rows, int steps, int ds, int da);

  std::span<const double> state(int row, int t) const {
    return {states.data() + (static_cast<std::size_t>(row) * horizon + t) * state_dim,
            static_cast<std::size_t>(state_dim)};
  }
  std::span<const double> action(int row, int t) const {
    return {actions.data() + (static_cast<std::size_t>(row) * horizon + t) * action_dim,
            static_cast<std::size_t>(action_dim)};
  }
  double reward(int row, int t) const {
    return rewards[static_cast<std::size_t>(row) * horizon + t];
  }
  double log_prob(int row, int t) const {
    return log_probs[static_cast<std::size_t>(row) * horizon + t];
  }
  bool done(int row, int t) const {
    return dones[static_cast<std::size_t>(row) * horizon + t] != 0;
  }

  // Discounted return sum_t gamma^t r_t over the row's valid steps.
  double discounted_return(int row, double gamma) const;
  double undiscounted_return(int row) const;
};

// Policy interface for rollout collection. Implementations must be safe to
// call concurrently on distinct rows (const access, per-call scratch).
class RolloutPolicy {
 public:
  virtual ~RolloutPolicy() = default;
  virtual int action_dim() const = 0;
  virtual bool stochastic() const = 0;
  // Writes the policy-native action for `state`; returns log-prob (0 when
  // deterministic). The batch records this value, keeping stored log-probs
  // consistent with stored actions.
  virtual double act(std::span<const double> state, std::span<double> action,
                     Rng& rng) const = 0;
  // Maps the recorded action into environment share units (identity by
  // default; stochastic trading policies clamp and scale here).
  virtual void to_env_action(std::span<const double> raw, std::span<double> env_action) const {
    std::copy(raw.begin(), raw.end(), env_action.begin());
  }
};

// N sub-environments advanced in lockstep. Rows are stepped by a worker pool
// with static chunking; each row writes only its own slice, so outputs are
// identical for any worker count, and bit-equal to N sequential runs.
class VecEnv {
 public:
  // workers = 0 selects min(n, hardware_concurrency).
  explicit VecEnv(std::vector<TradingEnv> envs, int workers = 0);

  int size() const { return static_cast<int>(envs_.size()); }
  int state_dim() const { return envs_.front().state_dim(); }
  int action_dim() const { return envs_.front().num_assets(); }
  int horizon() const;
  int workers() const { return pool_.workers(); }

  TradingEnv& sub_env(int i) { return envs_[static_cast<std::size_t>(i)]; }
  const TradingEnv& sub_env(int i) const { return envs_[static_cast<std::size_t>(i)]; }

  // states: N x D_s row-major.
  void batch_reset(std::span<double> states);

  // Steps every live row; finished rows keep their final state, emit reward 0
  // and stay done. actions: N x K; outputs sized N x D_s / N / N.
  void batch_step(std::span<const double> actions, std::span<double> states,
                  std::span<double> rewards, std::span<std::uint8_t> dones);

  // N rollouts of at most `horizon` steps. Per-row RNG streams derived from
  // `seed` make the result deterministic and worker-count independent.
  TrajectoryBatch collect(const RolloutPolicy& policy, int horizon, std::uint64_t seed);

 private:
  std::vector<TradingEnv> envs_;
  ThreadPool pool_;
};

// Convenience: N copies of one environment configuration over shared data.
VecEnv make_vec_env(std::shared_ptr<const data::FeaturePanel> data, const EnvConfig& cfg,
                    int n, int workers = 0);

struct BenchmarkResult {
  int n_envs = 0;
  double samples_per_second = 0.0;
  std::int64_t samples = 0;
};

// Measures rollout throughput (policy inference + stepping) at each N.
std::vector<BenchmarkResult> benchmark_sampling(
    std::shared_ptr<const data::FeaturePanel> data, const EnvConfig& cfg,
    const RolloutPolicy& policy, std::span<const int> n_envs, int horizon,
    std::uint64_t seed, int repeats = 3, int workers = 0);

}  // namespace finbench::env
