#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fd.hpp"
#include "finbench/env/vec_env.hpp"
#include "finbench/rl/pg.hpp"
#include "finbench/util/error.hpp"
#include "finbench/util/rng.hpp"
#include "support.hpp"

using namespace finbench;
using namespace finbench::env;
using namespace finbench::rl;
using testsupport::make_test_panel;
using testsupport::shared_panel;

namespace {

// Deterministic stateless policy: a fixed affine function of the state.
struct AffinePolicy final : RolloutPolicy {
  int da;
  double gain;
  explicit AffinePolicy(int action_dim, double g = 0.1) : da(action_dim), gain(g) {}
  int action_dim() const override { return da; }
  bool stochastic() const override { return false; }
  double act(std::span<const double> state, std::span<double> action, Rng&) const override {
    for (int k = 0; k < da; ++k) {
      action[k] = gain * std::sin(state[0] * 1e-6 + k) * 10.0;
    }
    return 0.0;
  }
};

}  // namespace

TEST_CASE("batch_reset returns identical rows for identical sub-envs") {
  EnvConfig cfg;
  const auto data = shared_panel(make_test_panel(3, 20, 1, 42));
  VecEnv venv = make_vec_env(data, cfg, 4, 2);
  std::vector<double> states(4 * venv.state_dim());
  venv.batch_reset(states);
  for (int row = 1; row < 4; ++row) {
    for (int i = 0; i < venv.state_dim(); ++i) {
      CHECK(states[row * venv.state_dim() + i] == states[i]);
    }
  }
}

TEST_CASE("lockstep equivalence: batch equals sequential, any worker count") {
  EnvConfig cfg;
  cfg.cost_rate = 0.001;
  cfg.max_shares_per_trade = 20.0;
  const int n = 8;
  const int steps = 100;
  const auto data = shared_panel(make_test_panel(2, steps + 1, 1, 7));
  const int k = 2;

  // Pre-drawn per-row action sequences.
  std::vector<double> actions(static_cast<std::size_t>(steps) * n * k);
  Rng rng(3);
  for (auto& a : actions) a = rng.uniform(-15.0, 15.0);

  // Sequential oracle.
  std::vector<std::vector<double>> seq_states;
  std::vector<std::vector<double>> seq_rewards(n);
  for (int row = 0; row < n; ++row) {
    TradingEnv env(data, cfg);
    env.reset();
    for (int t = 0; t < steps; ++t) {
      ActionVector a(actions.begin() + (static_cast<std::size_t>(t) * n + row) * k,
                     actions.begin() + (static_cast<std::size_t>(t) * n + row) * k + k);
      seq_rewards[row].push_back(env.step(a).reward);
    }
    seq_states.push_back(env.state().flatten());
  }

  for (const int workers : {1, 2, 8}) {
    CAPTURE(workers);
    VecEnv venv = make_vec_env(data, cfg, n, workers);
    std::vector<double> states(static_cast<std::size_t>(n) * venv.state_dim());
    std::vector<double> rewards(n);
    std::vector<std::uint8_t> dones(n);
    venv.batch_reset(states);
    for (int t = 0; t < steps; ++t) {
      const std::span<const double> step_actions(
          actions.data() + static_cast<std::size_t>(t) * n * k, static_cast<std::size_t>(n) * k);
      venv.batch_step(step_actions, states, rewards, dones);
      for (int row = 0; row < n; ++row) {
        CHECK(rewards[row] == seq_rewards[row][t]);  // bit-exact
      }
    }
    for (int row = 0; row < n; ++row) {
      for (int i = 0; i < venv.state_dim(); ++i) {
        CHECK(states[row * venv.state_dim() + i] == seq_states[row][i]);
      }
    }
  }
}

TEST_CASE("batch_step row-count mismatch is rejected") {
  EnvConfig cfg;
  VecEnv venv = make_vec_env(shared_panel(make_test_panel(1, 10, 0, 1)), cfg, 2, 1);
  std::vector<double> states(2 * venv.state_dim()), rewards(2), actions(3);
  std::vector<std::uint8_t> dones(2);
  CHECK_THROWS_AS(venv.batch_step(actions, states, rewards, dones), Error);
}

TEST_CASE("collect is deterministic and identical across worker counts") {
  EnvConfig cfg;
  cfg.max_shares_per_trade = 10.0;
  const auto data = shared_panel(make_test_panel(2, 30, 1, 11));

  GaussianPolicy policy(MarketState::flat_dim(2, 1), {8}, 2, true, -0.7);
  Rng init(5);
  policy.init(init);

  struct StochPolicy final : RolloutPolicy {
    const GaussianPolicy* p;
    int action_dim() const override { return p->action_dim(); }
    bool stochastic() const override { return true; }
    double act(std::span<const double> s, std::span<double> a, Rng& rng) const override {
      return p->sample(s, a, rng);
    }
  } rollout;
  rollout.p = &policy;

  VecEnv v1 = make_vec_env(data, cfg, 4, 1);
  VecEnv v8 = make_vec_env(data, cfg, 4, 8);
  const TrajectoryBatch a = v1.collect(rollout, 20, 99);
  const TrajectoryBatch b = v1.collect(rollout, 20, 99);
  const TrajectoryBatch c = v8.collect(rollout, 20, 99);
  CHECK(a.actions == b.actions);
  CHECK(a.rewards == b.rewards);
  CHECK(a.log_probs == b.log_probs);
  CHECK(a.actions == c.actions);  // worker-count independence
  CHECK(a.states == c.states);
}

TEST_CASE("collect: deterministic policy over shared data gives identical rows") {
  EnvConfig cfg;
  const auto data = shared_panel(make_test_panel(2, 25, 0, 13));
  VecEnv venv = make_vec_env(data, cfg, 4, 2);
  AffinePolicy policy(2);
  const TrajectoryBatch batch = venv.collect(policy, 24, 1);
  for (int row = 1; row < 4; ++row) {
    for (int t = 0; t < batch.lengths[row]; ++t) {
      CHECK(batch.reward(row, t) == batch.reward(0, t));
    }
  }
  CHECK(batch.lengths[0] == 24);
  CHECK(batch.done(0, 23));
}

TEST_CASE("reward rows telescope to v_T - v_0 per sub-env") {
  EnvConfig cfg;
  cfg.cost_rate = 0.001;
  const auto data = shared_panel(make_test_panel(2, 40, 0, 17));
  VecEnv venv = make_vec_env(data, cfg, 3, 2);
  AffinePolicy policy(2, 0.5);
  const TrajectoryBatch batch = venv.collect(policy, 39, 4);
  for (int row = 0; row < 3; ++row) {
    const double v_final = venv.sub_env(row).total_asset_value();
    CHECK(batch.undiscounted_return(row) ==
          doctest::Approx(v_final - cfg.initial_balance).epsilon(1e-10));
  }
}

namespace {

// One-step Gaussian bandit batch: a ~ pi(.|s0), r = -(a - c)^2.
TrajectoryBatch sample_bandit_batch(const GaussianPolicy& policy, int n, double c,
                                    std::uint64_t seed) {
  TrajectoryBatch batch;
  batch.resize(n, 1, policy.state_dim(), policy.action_dim());
  const std::vector<double> s0(policy.state_dim(), 0.5);
  Rng rng(seed);
  for (int j = 0; j < n; ++j) {
    std::vector<double> a(policy.action_dim());
    const double lp = policy.sample(s0, a, rng);
    std::copy(s0.begin(), s0.end(),
              batch.states.begin() + static_cast<std::size_t>(j) * policy.state_dim());
    std::copy(a.begin(), a.end(),
              batch.actions.begin() + static_cast<std::size_t>(j) * policy.action_dim());
    double r = 0.0;
    for (double ai : a) r -= (ai - c) * (ai - c);
    batch.rewards[j] = r;
    batch.log_probs[j] = lp;
    batch.dones[j] = 1;
    batch.lengths[j] = 1;
  }
  return batch;
}

double surrogate(const env::TrajectoryBatch& batch, const GaussianPolicy& policy, double gamma,
                 double baseline) {
  double total = 0.0;
  for (int j = 0; j < batch.n; ++j) {
    const double weight = batch.discounted_return(j, gamma) - baseline;
    for (int t = 0; t < batch.lengths[j]; ++t) {
      total += weight * policy.log_prob(batch.state(j, t), batch.action(j, t));
    }
  }
  return total / batch.n;
}

}  // namespace

TEST_CASE("gradient estimate equals finite differences of the frozen surrogate") {
  GaussianPolicy policy(2, {6}, 1, false, -0.3);
  Rng init(41);
  policy.init(init);
  const TrajectoryBatch batch = sample_bandit_batch(policy, 8, 0.3, 7);

  for (const auto mode : {BaselineMode::None, BaselineMode::BatchMeanReturn}) {
    const GradientEstimate est = estimate_policy_gradient(batch, policy, 0.99, mode);
    const double b = est.baseline;
    const auto numeric = testsupport::central_differences(
        policy.params(), [&] { return surrogate(batch, policy, 0.99, b); });
    CHECK(testsupport::gradient_error(est.grad, numeric) < 1e-4);
  }
}

TEST_CASE("trading-rollout gradient estimate matches the surrogate too") {
  EnvConfig cfg;
  cfg.max_shares_per_trade = 10.0;
  cfg.reward_scale = 1e-3;
  const auto data = shared_panel(make_test_panel(1, 12, 0, 19));
  VecEnv venv = make_vec_env(data, cfg, 4, 1);

  GaussianPolicy policy(MarketState::flat_dim(1, 0), {6}, 1, true, -0.5);
  Rng init(43);
  policy.init(init);
  struct Roll final : RolloutPolicy {
    const GaussianPolicy* p;
    int action_dim() const override { return 1; }
    bool stochastic() const override { return true; }
    double act(std::span<const double> s, std::span<double> a, Rng& rng) const override {
      return p->sample(s, a, rng);
    }
    void to_env_action(std::span<const double> raw, std::span<double> out) const override {
      out[0] = std::clamp(raw[0], -1.0, 1.0) * 10.0;
    }
  } rollout;
  rollout.p = &policy;
  const TrajectoryBatch batch = venv.collect(rollout, 11, 3);

  const GradientEstimate est =
      estimate_policy_gradient(batch, policy, 0.99, BaselineMode::BatchMeanReturn);
  const auto numeric = testsupport::central_differences(
      policy.params(), [&] { return surrogate(batch, policy, 0.99, est.baseline); });
  CHECK(testsupport::gradient_error(est.grad, numeric) < 1e-4);
}

TEST_CASE("n=1 with batch-mean baseline gives an exact zero gradient") {
  GaussianPolicy policy(2, {4}, 1, false, -0.3);
  Rng init(47);
  policy.init(init);
  const TrajectoryBatch batch = sample_bandit_batch(policy, 1, 0.3, 11);
  const GradientEstimate est =
      estimate_policy_gradient(batch, policy, 0.99, BaselineMode::BatchMeanReturn);
  for (double g : est.grad) CHECK(g == 0.0);
}

TEST_CASE("estimate mean over seeds approaches the closed-form bandit gradient") {
  // J(theta) = E[-(a - c)^2] = -((mu - c)^2 + sigma^2) for a ~ N(mu, sigma^2).
  GaussianPolicy policy(1, {2}, 1, false, -0.2);
  Rng init(53);
  policy.init(init);
  const double c = 0.4;
  const std::vector<double> s0(1, 0.5);
  std::vector<double> mu(1);
  policy.mean(s0, mu);
  const double sigma = policy.stddev(0);

  std::vector<double> closed(policy.param_count(), 0.0);
  policy.mean_backward(s0, std::vector<double>{-2.0 * (mu[0] - c)}, closed);
  closed[policy.log_std_offset()] = -2.0 * sigma * sigma;

  std::vector<double> mean_grad(policy.param_count(), 0.0);
  const int seeds = 400;
  for (int s = 0; s < seeds; ++s) {
    const TrajectoryBatch batch = sample_bandit_batch(policy, 64, c, 1000 + s);
    const GradientEstimate est =
        estimate_policy_gradient(batch, policy, 0.99, BaselineMode::BatchMeanReturn);
    for (std::size_t i = 0; i < mean_grad.size(); ++i) mean_grad[i] += est.grad[i] / seeds;
  }
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < mean_grad.size(); ++i) {
    err += (mean_grad[i] - closed[i]) * (mean_grad[i] - closed[i]);
    scale += closed[i] * closed[i];
  }
  CHECK(std::sqrt(err) < 0.15 * std::max(1.0, std::sqrt(scale)));
}

TEST_CASE("variance shrinks as the trajectory count grows") {
  GaussianPolicy policy(1, {3}, 1, false, -0.2);
  Rng init(59);
  policy.init(init);
  const int seeds = 30;
  const auto aggregate_variance = [&](int n) {
    std::vector<std::vector<double>> grads;
    for (int s = 0; s < seeds; ++s) {
      const TrajectoryBatch batch = sample_bandit_batch(policy, n, 0.3, 2000 + s);
      grads.push_back(
          estimate_policy_gradient(batch, policy, 0.99, BaselineMode::None).grad);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < grads[0].size(); ++i) {
      double m = 0.0;
      for (const auto& g : grads) m += g[i] / seeds;
      for (const auto& g : grads) total += (g[i] - m) * (g[i] - m) / (seeds - 1);
    }
    return total;
  };
  CHECK(aggregate_variance(32) < aggregate_variance(4));
}

TEST_CASE("benchmark harness reports positive throughput") {
  EnvConfig cfg;
  const auto data = shared_panel(make_test_panel(2, 50, 1, 23));
  AffinePolicy policy(2);
  const std::vector<int> sizes = {1, 2};
  const auto results = benchmark_sampling(data, cfg, policy, sizes, 40, 5, 2);
  REQUIRE(results.size() == 2);
  CHECK(results[0].n_envs == 1);
  CHECK(results[0].samples_per_second > 0.0);
  CHECK(results[1].samples == 2 * 40);
}
