#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "finbench/env/vec_env.hpp"
#include "finbench/rl/policy.hpp"
#include "finbench/rl/qnet.hpp"
#include "finbench/util/rng.hpp"

namespace finbench::rl {

enum class Algorithm { Ppo, Ddpg, Sac, Dqn, DoubleDqn, DuelingDqn };

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
bool is_value_based(Algorithm a);

struct AgentSpec {
  Algorithm algorithm = Algorithm::Ppo;
  std::vector<int> hidden = {64, 32};
  double learning_rate = 3e-4;
  int batch_size = 64;
  double gamma = 0.99;

  // value-based exploration: epsilon annealed linearly to `epsilon` over
  // `epsilon_anneal_steps`, then held
  double epsilon = 0.005;
  double epsilon_initial = 1.0;
  int epsilon_anneal_steps = 5000;
  int target_sync_interval = 250;

  // ppo
  double clip = 0.2;
  double gae_lambda = 0.95;
  int epochs = 10;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  int rollout_horizon = 128;

  // off-policy
  int replay_capacity = 100000;
  int warmup_steps = 500;
  double polyak = 0.005;
  double exploration_noise = 0.1;  // ddpg
  double sac_alpha = 0.2;          // fixed temperature
  int max_episode_steps = 0;       // 0 = env-controlled episode end

  double init_log_std = -0.7;
  std::uint64_t seed = 0;

  void validate() const;
};

// Paper task profiles.
AgentSpec stock_daily_spec(Algorithm a);
AgentSpec crypto_second_spec(Algorithm a);

// Welford running mean/variance feature normalizer; frozen after training.
struct RunningNorm {
  std::vector<double> mean;
  std::vector<double> m2;
  double count = 0.0;

  void reset(int dim);
  void update(std::span<const double> x);
  void normalize(std::span<const double> x, std::span<double> out) const;
  std::vector<double> normalize(std::span<const double> x) const;
};

struct TrainingRecord {
  int iteration = 0;
  double mean_return = 0.0;
  double loss = 0.0;
};

enum class ActMode { Exploit, Explore };

// Immutable post-training artifact: parameters, normalization, the action
// mapping into the environment's share units, and the training log.
class TrainedAgent {
 public:
  AgentSpec spec;
  int state_dim = 0;
  int action_dim = 0;
  double action_scale = 1.0;           // continuous: shares = out * scale
  std::vector<double> action_levels;   // discrete share levels
  RunningNorm norm;

  std::shared_ptr<GaussianPolicy> policy;  // ppo / sac / ddpg actor
  std::vector<double> value_params;        // ppo critic
  std::vector<double> critic1_params;      // ddpg / sac
  std::vector<double> critic2_params;      // sac twin
  std::vector<double> q_params;            // dqn family

  std::vector<TrainingRecord> log;
  std::uint64_t updates = 0;

  // Policy-space output in [-1, 1]^K before env scaling.
  std::vector<double> policy_output(std::span<const double> state, ActMode mode,
                                    Rng* rng) const;
  // Action in share units for the trading environment.
  env::ActionVector act(std::span<const double> state, ActMode mode, Rng* rng) const;
  // Discrete level index (value-based agents).
  int act_discrete(std::span<const double> state, ActMode mode, Rng* rng) const;

  nlohmann::json to_json() const;
  static TrainedAgent from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static TrainedAgent load(const std::string& path);
};

// Target-network helpers.
void hard_sync(std::span<double> target, std::span<const double> online);
void polyak_update(std::span<double> target, std::span<const double> online, double tau);

// Clipped-surrogate term min(r*A, clip(r, 1-eps, 1+eps)*A), maximized.
double ppo_clip_objective(double ratio, double advantage, double clip);

// Double-DQN bootstrap: evaluate the online argmax under the target net.
double double_dqn_target(std::span<const double> q_online_next,
                         std::span<const double> q_target_next);

// Generic episodic environment with a discrete action set, used by the
// DQN-family trainer (the trading adapter and toy problems implement it).
class DiscreteEnv {
 public:
  virtual ~DiscreteEnv() = default;
  virtual int state_dim() const = 0;
  virtual int num_actions() const = 0;
  virtual std::vector<double> reset() = 0;
  struct StepOut {
    std::vector<double> state;
    double reward = 0.0;
    bool done = false;
  };
  virtual StepOut step(int action) = 0;
  // Share value (or other scalar) each level index stands for.
  virtual std::vector<double> action_values() const {
    std::vector<double> v(num_actions());
    for (int i = 0; i < num_actions(); ++i) v[i] = i;
    return v;
  }
};

// Single-asset trading environment exposed through the discrete interface;
// level i maps to trading cfg.action_levels[i] shares.
class DiscreteTradingEnv final : public DiscreteEnv {
 public:
  explicit DiscreteTradingEnv(env::TradingEnv env);
  int state_dim() const override { return env_.state_dim(); }
  int num_actions() const override {
    return static_cast<int>(env_.config().action_levels.size());
  }
  std::vector<double> reset() override;
  StepOut step(int action) override;
  std::vector<double> action_values() const override { return env_.config().action_levels; }
  const env::TradingEnv& base() const { return env_; }

 private:
  env::TradingEnv env_;
};

// Diversity regularization against already-trained peers: the per-state term
// lambda * sum_B KL(pi_B || pi_A) joins the maximized objective. Peers with a
// sigma override are treated as fixed-width Gaussians around their mean
// (surrogate for deterministic actors).
struct PeerPolicy {
  const GaussianPolicy* policy = nullptr;
  std::optional<double> sigma_override;
};

struct DiversityPenalty {
  std::vector<PeerPolicy> peers;
  double lambda = 0.0;
};

// PPO: collect with the vectorized env, GAE advantages, clipped-surrogate and
// value-loss minibatch updates.
TrainedAgent train_on_policy(const AgentSpec& spec, env::VecEnv& venv, int iterations,
                             const DiversityPenalty* diversity = nullptr);

// DDPG / SAC over the vectorized continuous env; `steps` counts batch steps
// (transitions = steps * venv.size()).
TrainedAgent train_off_policy(const AgentSpec& spec, env::VecEnv& venv, int steps);

// DQN / Double DQN / Dueling DQN over a discrete env; `steps` counts env steps.
TrainedAgent train_off_policy(const AgentSpec& spec, DiscreteEnv& den, int steps);

}  // namespace finbench::rl
