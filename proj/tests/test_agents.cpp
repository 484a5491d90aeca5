#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "finbench/rl/agents.hpp"
#include "finbench/rl/losses.hpp"
#include "finbench/util/error.hpp"
#include "support.hpp"
#include "toy_mdp.hpp"

using namespace finbench;
using namespace finbench::rl;
using testsupport::ChainMdp;
using testsupport::make_test_panel;
using testsupport::shared_panel;

namespace {

// Value-based agent whose Q head ignores the state: zero weights, output
// biases carry the Q values directly.
TrainedAgent fixed_q_agent(const std::vector<double>& q_values, double epsilon) {
  TrainedAgent agent;
  agent.spec.algorithm = Algorithm::Dqn;
  agent.spec.hidden = {2};
  agent.spec.epsilon = epsilon;
  agent.state_dim = 2;
  agent.action_dim = 1;
  agent.action_levels = {-1.0, 0.0, 1.0};
  const MlpQNetwork net(2, {2}, static_cast<int>(q_values.size()));
  agent.q_params.assign(net.param_count(), 0.0);
  // Layout: W1(2x2), b1(2), W2(Lx2), b2(L) -> final biases at the tail.
  for (std::size_t i = 0; i < q_values.size(); ++i) {
    agent.q_params[net.param_count() - q_values.size() + i] = q_values[i];
  }
  return agent;
}

}  // namespace

TEST_CASE("exploit picks the argmax Q action") {
  const TrainedAgent agent = fixed_q_agent({1.0, 3.0, 2.0}, 0.0);
  const std::vector<double> state = {0.3, -0.8};
  CHECK(agent.act_discrete(state, ActMode::Exploit, nullptr) == 1);
  // act() maps the level index into share units.
  CHECK(agent.act(state, ActMode::Exploit, nullptr)[0] == 0.0);
}

TEST_CASE("epsilon = 1 explores uniformly (chi-square at the 1% level)") {
  const TrainedAgent agent = fixed_q_agent({1.0, 3.0, 2.0}, 1.0);
  const std::vector<double> state = {0.0, 0.0};
  Rng rng(17);
  std::array<int, 3> counts{};
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    ++counts[static_cast<std::size_t>(agent.act_discrete(state, ActMode::Explore, &rng))];
  }
  const double expected = draws / 3.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 9.21);  // chi-square(2) critical value at 1%
}

TEST_CASE("exploit mode is deterministic") {
  const TrainedAgent agent = fixed_q_agent({0.5, 0.1, 0.9}, 0.0);
  const std::vector<double> state = {1.0, 2.0};
  CHECK(agent.act_discrete(state, ActMode::Exploit, nullptr) ==
        agent.act_discrete(state, ActMode::Exploit, nullptr));
}

TEST_CASE("ppo clip term: ratio 1.5, advantage +1, clip 0.2 contributes 1.2") {
  CHECK(ppo_clip_objective(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(ppo_clip_objective(0.9, 1.0, 0.2) == doctest::Approx(0.9));
  CHECK(ppo_clip_objective(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
}

TEST_CASE("double dqn bootstrap uses the online argmax under the target net") {
  const std::vector<double> q_online = {1.0, 5.0};
  const std::vector<double> q_target = {10.0, 2.0};
  CHECK(double_dqn_target(q_online, q_target) == 2.0);
}

TEST_CASE("target sync helpers") {
  std::vector<double> online = {1.0, -2.0, 3.0};
  std::vector<double> target = {0.0, 0.0, 0.0};
  hard_sync(target, online);
  CHECK(target == online);

  // Polyak-averaged targets converge toward frozen online params.
  target = {10.0, 10.0, 10.0};
  for (int i = 0; i < 2000; ++i) polyak_update(target, online, 0.01);
  for (std::size_t i = 0; i < online.size(); ++i) {
    CHECK(target[i] == doctest::Approx(online[i]).epsilon(1e-6));
  }
}

TEST_CASE("profiles carry the published hyperparameters") {
  const AgentSpec stock = stock_daily_spec(Algorithm::Ppo);
  CHECK(stock.hidden == std::vector<int>{64, 32});
  CHECK(stock.learning_rate == doctest::Approx(3e-4));
  CHECK(stock.batch_size == 64);

  const AgentSpec crypto = crypto_second_spec(Algorithm::Dqn);
  CHECK(crypto.hidden == std::vector<int>{128, 128, 128});
  CHECK(crypto.epsilon == doctest::Approx(0.005));
  CHECK(crypto.learning_rate == doctest::Approx(2e-6));
  CHECK(crypto.batch_size == 512);
}

TEST_CASE("dqn recovers the value-iteration policy on the chain (one seed each)") {
  CHECK(testsupport::chain_recovers_optimal(Algorithm::Dqn, 1));
  CHECK(testsupport::chain_recovers_optimal(Algorithm::DoubleDqn, 1));
  CHECK(testsupport::chain_recovers_optimal(Algorithm::DuelingDqn, 1));
}

TEST_CASE("value iteration oracle sanity: always-right is optimal") {
  const auto policy = ChainMdp::optimal_policy(0.9);
  for (int a : policy) CHECK(a == 2);
}

TEST_CASE("ppo training improves returns on a deterministic uptrend") {
  data::SyntheticSpec spec;
  spec.assets = 1;
  spec.periods = 50;
  spec.drift = 0.01;
  spec.noise = 0.0;
  const auto data = testsupport::shared_panel(
      data::attach_noise_features(data::make_synthetic_panel(spec, 3), 0, 4));

  env::EnvConfig env_cfg;
  env_cfg.cost_rate = 0.0;
  env_cfg.max_shares_per_trade = 100.0;
  env_cfg.reward_scale = std::pow(2.0, -10);
  env::VecEnv venv = env::make_vec_env(data, env_cfg, 4, 1);

  AgentSpec agent_spec = stock_daily_spec(Algorithm::Ppo);
  agent_spec.rollout_horizon = 49;
  agent_spec.epochs = 5;
  agent_spec.seed = 7;
  const TrainedAgent agent = train_on_policy(agent_spec, venv, 12);
  REQUIRE(agent.log.size() == 12);
  CHECK(agent.log.back().mean_return > agent.log.front().mean_return);
  CHECK(agent.updates > 0);
}

TEST_CASE("fixed seed reproduces training bit-identically") {
  const auto data = shared_panel(make_test_panel(2, 30, 1, 5));
  env::EnvConfig env_cfg;
  env_cfg.reward_scale = 1e-4;
  AgentSpec spec = stock_daily_spec(Algorithm::Ppo);
  spec.rollout_horizon = 20;
  spec.epochs = 2;
  spec.seed = 11;

  env::VecEnv venv_a = env::make_vec_env(data, env_cfg, 2, 1);
  env::VecEnv venv_b = env::make_vec_env(data, env_cfg, 2, 2);
  const TrainedAgent a = train_on_policy(spec, venv_a, 3);
  const TrainedAgent b = train_on_policy(spec, venv_b, 3);
  CHECK(std::vector<double>(a.policy->params().begin(), a.policy->params().end()) ==
        std::vector<double>(b.policy->params().begin(), b.policy->params().end()));
  CHECK(a.value_params == b.value_params);
}

TEST_CASE("ddpg and sac run and produce finite bounded policies") {
  const auto data = shared_panel(make_test_panel(1, 40, 0, 9, 0.01, 0.0));
  env::EnvConfig env_cfg;
  env_cfg.reward_scale = 1e-4;
  env_cfg.max_shares_per_trade = 10.0;

  for (const Algorithm alg : {Algorithm::Ddpg, Algorithm::Sac}) {
    CAPTURE(algorithm_name(alg));
    AgentSpec spec = stock_daily_spec(alg);
    spec.hidden = {16, 16};
    spec.warmup_steps = 64;
    spec.batch_size = 32;
    spec.learning_rate = 1e-3;
    spec.seed = 13;
    env::VecEnv venv = env::make_vec_env(data, env_cfg, 2, 1);
    const TrainedAgent agent = train_off_policy(spec, venv, 300);
    CHECK(agent.updates > 0);
    const std::vector<double> state(agent.state_dim, 1.0);
    const env::ActionVector action = agent.act(state, ActMode::Exploit, nullptr);
    REQUIRE(action.size() == 1);
    CHECK(std::isfinite(action[0]));
    CHECK(std::abs(action[0]) <= env_cfg.max_shares_per_trade + 1e-9);
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const auto data = shared_panel(make_test_panel(2, 25, 1, 21));
  env::EnvConfig env_cfg;
  env_cfg.reward_scale = 1e-4;
  AgentSpec spec = stock_daily_spec(Algorithm::Ppo);
  spec.rollout_horizon = 15;
  spec.epochs = 2;
  spec.seed = 29;
  env::VecEnv venv = env::make_vec_env(data, env_cfg, 2, 1);
  const TrainedAgent agent = train_on_policy(spec, venv, 2);

  testsupport::TempFile file("", ".json");
  agent.save(file.path());
  const TrainedAgent loaded = TrainedAgent::load(file.path());
  CHECK(std::vector<double>(loaded.policy->params().begin(), loaded.policy->params().end()) ==
        std::vector<double>(agent.policy->params().begin(), agent.policy->params().end()));
  CHECK(loaded.value_params == agent.value_params);
  CHECK(loaded.norm.mean == agent.norm.mean);
  CHECK(loaded.norm.m2 == agent.norm.m2);
  CHECK(loaded.norm.count == agent.norm.count);
  CHECK(loaded.updates == agent.updates);
  CHECK(loaded.action_scale == agent.action_scale);

  // Bit-exact round trip implies identical behavior.
  const std::vector<double> state(agent.state_dim, 0.5);
  CHECK(loaded.act(state, ActMode::Exploit, nullptr) ==
        agent.act(state, ActMode::Exploit, nullptr));
}

TEST_CASE("running norm freezes for inference") {
  RunningNorm norm;
  norm.reset(2);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    norm.update(std::vector<double>{rng.normal(5.0, 2.0), rng.normal(-1.0, 0.5)});
  }
  const std::vector<double> x = {5.0, -1.0};
  const std::vector<double> a = norm.normalize(x);
  const std::vector<double> b = norm.normalize(x);
  CHECK(a == b);
  CHECK(std::abs(a[0]) < 1.0);  // near the running mean
}

TEST_CASE("trainer rejects mismatched algorithms") {
  const auto data = shared_panel(make_test_panel(1, 10, 0, 3));
  env::EnvConfig env_cfg;
  env::VecEnv venv = env::make_vec_env(data, env_cfg, 1, 1);
  AgentSpec spec = stock_daily_spec(Algorithm::Dqn);
  CHECK_THROWS_AS(train_on_policy(spec, venv, 1), Error);
  CHECK_THROWS_AS(train_off_policy(spec, venv, 1), Error);

  ChainMdp chain;
  AgentSpec ppo = stock_daily_spec(Algorithm::Ppo);
  CHECK_THROWS_AS(train_off_policy(ppo, chain, 1), Error);
}

TEST_CASE("discrete trading adapter maps level indices to share trades") {
  auto fp = make_test_panel(1, 10, 0, 31);
  env::EnvConfig cfg;
  cfg.action_mode = env::ActionMode::Discrete;
  cfg.action_levels = {-5.0, 0.0, 5.0};
  DiscreteTradingEnv den{env::TradingEnv(shared_panel(fp), cfg)};
  CHECK(den.num_actions() == 3);
  CHECK(den.action_values() == std::vector<double>{-5.0, 0.0, 5.0});
  den.reset();
  den.step(2);  // buy 5
  CHECK(den.base().state().holdings[0] == 5.0);
  CHECK_THROWS_AS(den.step(7), Error);
}
