#include "finbench/env/vec_env.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "finbench/util/error.hpp"

namespace finbench::env {

void TrajectoryBatch::resize(int rows, int steps, int ds, int da) {
  n = rows;
  horizon = steps;
  state_dim = ds;
  action_dim = da;
  const std::size_t cells = static_cast<std::size_t>(rows) * steps;
  states.assign(cells * ds, 0.0);
  actions.assign(cells * da, 0.0);
  rewards.assign(cells, 0.0);
  dones.assign(cells, 0);
  log_probs.assign(cells, 0.0);
  lengths.assign(rows, 0);
}

double TrajectoryBatch::discounted_return(int row, double gamma) const {
  double r = 0.0;
  double g = 1.0;
  for (int t = 0; t < lengths[row]; ++t) {
    r += g * reward(row, t);
    g *= gamma;
  }
  return r;
}

double TrajectoryBatch::undiscounted_return(int row) const {
  double r = 0.0;
  for (int t = 0; t < lengths[row]; ++t) r += reward(row, t);
  return r;
}

namespace {

int resolve_workers(int requested, int n) {
  if (requested > 0) return requested;
  const auto hw = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, std::min(n, hw > 0 ? hw : 1));
}

}  // namespace

VecEnv::VecEnv(std::vector<TradingEnv> envs, int workers)
    : envs_(std::move(envs)), pool_(resolve_workers(workers, static_cast<int>(envs_.size()))) {
  if (envs_.empty()) fail(Errc::InvalidArgument, "vec env needs at least one sub-env");
  for (const auto& e : envs_) {
    if (e.state_dim() != envs_.front().state_dim() ||
        e.num_assets() != envs_.front().num_assets()) {
      fail(Errc::DimensionMismatch, "sub-env shapes differ");
    }
  }
}

int VecEnv::horizon() const {
  int h = envs_.front().horizon();
  for (const auto& e : envs_) h = std::min(h, e.horizon());
  return h;
}

void VecEnv::batch_reset(std::span<double> states) {
  const std::size_t ds = static_cast<std::size_t>(state_dim());
  if (states.size() != ds * envs_.size()) {
    fail(Errc::DimensionMismatch, "batch_reset output size mismatch");
  }
  pool_.parallel_for(size(), [&](int row) {
    envs_[row].reset();
    envs_[row].state().flatten_into(states.subspan(row * ds, ds));
  });
}

void VecEnv::batch_step(std::span<const double> actions, std::span<double> states,
                        std::span<double> rewards, std::span<std::uint8_t> dones) {
  const std::size_t n = envs_.size();
  const std::size_t k = static_cast<std::size_t>(action_dim());
  const std::size_t ds = static_cast<std::size_t>(state_dim());
  if (actions.size() != n * k) fail(Errc::DimensionMismatch, "action row count mismatch");
  if (states.size() != n * ds || rewards.size() != n || dones.size() != n) {
    fail(Errc::DimensionMismatch, "batch_step output size mismatch");
  }
  pool_.parallel_for(static_cast<int>(n), [&](int row) {
    TradingEnv& e = envs_[row];
    if (e.done()) {
      e.state().flatten_into(states.subspan(row * ds, ds));
      rewards[row] = 0.0;
      dones[row] = 1;
      return;
    }
    ActionVector a(actions.begin() + row * k, actions.begin() + (row + 1) * k);
    const StepResult r = e.step(a);
    e.state().flatten_into(states.subspan(row * ds, ds));
    rewards[row] = r.reward;
    dones[row] = r.done ? 1 : 0;
  });
}

TrajectoryBatch VecEnv::collect(const RolloutPolicy& policy, int horizon, std::uint64_t seed) {
  if (policy.action_dim() != action_dim()) {
    fail(Errc::DimensionMismatch, "policy action dim does not match env");
  }
  if (horizon < 1) fail(Errc::InvalidArgument, "horizon must be >= 1");
  const int n = size();
  const int ds = state_dim();
  const int da = action_dim();

  TrajectoryBatch batch;
  batch.resize(n, horizon, ds, da);

  std::vector<Rng> row_rng;
  row_rng.reserve(n);
  for (int row = 0; row < n; ++row) {
    row_rng.push_back(Rng::stream(seed, "rollout", static_cast<std::uint64_t>(row)));
  }

  pool_.parallel_for(n, [&](int row) {
    TradingEnv& e = envs_[row];
    e.reset();
    Rng& rng = row_rng[row];
    std::vector<double> action(da);
    ActionVector env_action(da);
    int steps = 0;
    for (int t = 0; t < horizon; ++t) {
      const std::size_t cell = static_cast<std::size_t>(row) * horizon + t;
      e.state().flatten_into(
          std::span<double>(batch.states.data() + cell * ds, static_cast<std::size_t>(ds)));
      const double lp = policy.act(
          std::span<const double>(batch.states.data() + cell * ds, static_cast<std::size_t>(ds)),
          action, rng);
      for (double a : action) {
        if (!std::isfinite(a)) fail(Errc::InvalidArgument, "policy emitted non-finite action");
      }
      std::copy(action.begin(), action.end(), batch.actions.begin() + cell * da);
      policy.to_env_action(action, env_action);
      const StepResult r = e.step(env_action);
      batch.rewards[cell] = r.reward;
      batch.log_probs[cell] = lp;
      batch.dones[cell] = r.done ? 1 : 0;
      ++steps;
      if (r.done) break;
    }
    batch.lengths[row] = steps;
  });
  return batch;
}

VecEnv make_vec_env(std::shared_ptr<const data::FeaturePanel> data, const EnvConfig& cfg,
                    int n, int workers) {
  std::vector<TradingEnv> envs;
  envs.reserve(n);
  for (int i = 0; i < n; ++i) envs.emplace_back(data, cfg);
  return VecEnv(std::move(envs), workers);
}

std::vector<BenchmarkResult> benchmark_sampling(
    std::shared_ptr<const data::FeaturePanel> data, const EnvConfig& cfg,
    const RolloutPolicy& policy, std::span<const int> n_envs, int horizon,
    std::uint64_t seed, int repeats, int workers) {
  std::vector<BenchmarkResult> results;
  for (int n : n_envs) {
    VecEnv venv = make_vec_env(data, cfg, n, workers);
    const int h = std::min(horizon, venv.horizon());
    // Warm-up pass, then best-of-repeats wall time.
    venv.collect(policy, h, seed);
    double best = 0.0;
    std::int64_t samples = 0;
    for (int r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      TrajectoryBatch batch = venv.collect(policy, h, seed + r);
      const auto stop = std::chrono::steady_clock::now();
      samples = 0;
      for (int row = 0; row < batch.n; ++row) samples += batch.lengths[row];
      const double secs = std::chrono::duration<double>(stop - start).count();
      if (secs > 0.0) best = std::max(best, static_cast<double>(samples) / secs);
    }
    results.push_back({n, best, samples});
  }
  return results;
}

}  // namespace finbench::env
