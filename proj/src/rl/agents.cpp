#include "finbench/rl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "finbench/util/error.hpp"

namespace finbench::rl {

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Ppo: return "ppo";
    case Algorithm::Ddpg: return "ddpg";
    case Algorithm::Sac: return "sac";
    case Algorithm::Dqn: return "dqn";
    case Algorithm::DoubleDqn: return "double_dqn";
    case Algorithm::DuelingDqn: return "dueling_dqn";
  }
  return "ppo";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "ppo") return Algorithm::Ppo;
  if (name == "ddpg") return Algorithm::Ddpg;
  if (name == "sac") return Algorithm::Sac;
  if (name == "dqn") return Algorithm::Dqn;
  if (name == "double_dqn") return Algorithm::DoubleDqn;
  if (name == "dueling_dqn") return Algorithm::DuelingDqn;
  fail(Errc::ConfigError, "unknown algorithm: " + name);
}

bool is_value_based(Algorithm a) {
  return a == Algorithm::Dqn || a == Algorithm::DoubleDqn || a == Algorithm::DuelingDqn;
}

void AgentSpec::validate() const {
  if (!(learning_rate > 0.0)) fail(Errc::ConfigError, "learning rate must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) fail(Errc::ConfigError, "gamma must be in (0, 1)");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail(Errc::ConfigError, "epsilon must be in [0, 1]");
  if (batch_size < 1) fail(Errc::ConfigError, "batch size must be >= 1");
  if (hidden.empty()) fail(Errc::ConfigError, "at least one hidden layer required");
  for (int h : hidden) {
    if (h < 1) fail(Errc::ConfigError, "hidden sizes must be positive");
  }
  if (!(clip > 0.0)) fail(Errc::ConfigError, "ppo clip must be positive");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    fail(Errc::ConfigError, "gae lambda must be in [0, 1]");
  }
  if (replay_capacity < 1) fail(Errc::ConfigError, "replay capacity must be >= 1");
}

AgentSpec stock_daily_spec(Algorithm a) {
  AgentSpec spec;
  spec.algorithm = a;
  spec.hidden = {64, 32};
  spec.learning_rate = 3e-4;
  spec.batch_size = 64;
  return spec;
}

AgentSpec crypto_second_spec(Algorithm a) {
  AgentSpec spec;
  spec.algorithm = a;
  spec.hidden = {128, 128, 128};
  spec.epsilon = 0.005;
  spec.learning_rate = 2e-6;
  spec.batch_size = 512;
  return spec;
}

void RunningNorm::reset(int dim) {
  mean.assign(dim, 0.0);
  m2.assign(dim, 0.0);
  count = 0.0;
}

void RunningNorm::update(std::span<const double> x) {
  if (mean.empty()) reset(static_cast<int>(x.size()));
  if (x.size() != mean.size()) fail(Errc::DimensionMismatch, "norm update size mismatch");
  count += 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double delta = x[i] - mean[i];
    mean[i] += delta / count;
    m2[i] += delta * (x[i] - mean[i]);
  }
}

void RunningNorm::normalize(std::span<const double> x, std::span<double> out) const {
  if (mean.empty() || count < 2.0) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double var = m2[i] / count;
    out[i] = (x[i] - mean[i]) / std::sqrt(var + 1e-8);
  }
}

std::vector<double> RunningNorm::normalize(std::span<const double> x) const {
  std::vector<double> out(x.size());
  normalize(x, out);
  return out;
}

std::vector<double> TrainedAgent::policy_output(std::span<const double> state, ActMode mode,
                                                Rng* rng) const {
  if (!policy) fail(Errc::InvalidArgument, "agent has no continuous policy");
  const std::vector<double> ns = norm.normalize(state);
  std::vector<double> out(action_dim);
  if (mode == ActMode::Exploit) {
    policy->mean(ns, out);
    if (spec.algorithm == Algorithm::Sac) {
      for (double& a : out) a = std::tanh(a);
    }
  } else {
    if (rng == nullptr) fail(Errc::InvalidArgument, "explore mode needs an rng");
    if (spec.algorithm == Algorithm::Ddpg) {
      // ddpg explores with external Gaussian noise around the deterministic mean
      policy->mean(ns, out);
      for (int i = 0; i < action_dim; ++i) out[i] += spec.exploration_noise * rng->normal();
    } else {
      policy->sample(ns, out, *rng);
      if (spec.algorithm == Algorithm::Sac) {
        for (double& a : out) a = std::tanh(a);
      }
    }
    for (double& a : out) a = std::clamp(a, -1.0, 1.0);
  }
  return out;
}

env::ActionVector TrainedAgent::act(std::span<const double> state, ActMode mode,
                                    Rng* rng) const {
  if (is_value_based(spec.algorithm)) {
    const int level = act_discrete(state, mode, rng);
    env::ActionVector a(action_dim, 0.0);
    a[0] = action_levels[static_cast<std::size_t>(level)];
    return a;
  }
  std::vector<double> out = policy_output(state, mode, rng);
  env::ActionVector a(action_dim);
  for (int i = 0; i < action_dim; ++i) a[i] = std::clamp(out[i], -1.0, 1.0) * action_scale;
  return a;
}

int TrainedAgent::act_discrete(std::span<const double> state, ActMode mode, Rng* rng) const {
  if (q_params.empty()) fail(Errc::InvalidArgument, "agent has no Q network");
  const int levels = static_cast<int>(action_levels.size());
  if (mode == ActMode::Explore) {
    if (rng == nullptr) fail(Errc::InvalidArgument, "explore mode needs an rng");
    if (rng->uniform01() < spec.epsilon) return rng->uniform_int(levels);
  }
  const auto qnet = make_q_network(spec.algorithm == Algorithm::DuelingDqn, state_dim,
                                   spec.hidden, levels);
  const std::vector<double> ns = norm.normalize(state);
  std::vector<double> q(levels);
  qnet->forward(q_params, ns, q);
  int best = 0;
  for (int i = 1; i < levels; ++i) {
    if (q[i] > q[best]) best = i;
  }
  return best;
}

namespace {

nlohmann::json spec_to_json(const AgentSpec& s) {
  return nlohmann::json{{"algorithm", algorithm_name(s.algorithm)},
                        {"hidden", s.hidden},
                        {"learning_rate", s.learning_rate},
                        {"batch_size", s.batch_size},
                        {"gamma", s.gamma},
                        {"epsilon", s.epsilon},
                        {"epsilon_initial", s.epsilon_initial},
                        {"epsilon_anneal_steps", s.epsilon_anneal_steps},
                        {"target_sync_interval", s.target_sync_interval},
                        {"clip", s.clip},
                        {"gae_lambda", s.gae_lambda},
                        {"epochs", s.epochs},
                        {"entropy_coef", s.entropy_coef},
                        {"value_coef", s.value_coef},
                        {"rollout_horizon", s.rollout_horizon},
                        {"replay_capacity", s.replay_capacity},
                        {"warmup_steps", s.warmup_steps},
                        {"polyak", s.polyak},
                        {"exploration_noise", s.exploration_noise},
                        {"sac_alpha", s.sac_alpha},
                        {"max_episode_steps", s.max_episode_steps},
                        {"init_log_std", s.init_log_std},
                        {"seed", s.seed}};
}

AgentSpec spec_from_json(const nlohmann::json& j) {
  AgentSpec s;
  s.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  s.hidden = j.at("hidden").get<std::vector<int>>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.batch_size = j.at("batch_size").get<int>();
  s.gamma = j.at("gamma").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  s.epsilon_initial = j.at("epsilon_initial").get<double>();
  s.epsilon_anneal_steps = j.at("epsilon_anneal_steps").get<int>();
  s.target_sync_interval = j.at("target_sync_interval").get<int>();
  s.clip = j.at("clip").get<double>();
  s.gae_lambda = j.at("gae_lambda").get<double>();
  s.epochs = j.at("epochs").get<int>();
  s.entropy_coef = j.at("entropy_coef").get<double>();
  s.value_coef = j.at("value_coef").get<double>();
  s.rollout_horizon = j.at("rollout_horizon").get<int>();
  s.replay_capacity = j.at("replay_capacity").get<int>();
  s.warmup_steps = j.at("warmup_steps").get<int>();
  s.polyak = j.at("polyak").get<double>();
  s.exploration_noise = j.at("exploration_noise").get<double>();
  s.sac_alpha = j.at("sac_alpha").get<double>();
  s.max_episode_steps = j.at("max_episode_steps").get<int>();
  s.init_log_std = j.at("init_log_std").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

nlohmann::json TrainedAgent::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["spec"] = spec_to_json(spec);
  j["state_dim"] = state_dim;
  j["action_dim"] = action_dim;
  j["action_scale"] = action_scale;
  j["action_levels"] = action_levels;
  j["norm"] = {{"mean", norm.mean}, {"m2", norm.m2}, {"count", norm.count}};
  if (policy) {
    j["policy_params"] =
        std::vector<double>(policy->params().begin(), policy->params().end());
  }
  j["value_params"] = value_params;
  j["critic1_params"] = critic1_params;
  j["critic2_params"] = critic2_params;
  j["q_params"] = q_params;
  j["updates"] = updates;
  nlohmann::json log_json = nlohmann::json::array();
  for (const auto& rec : log) {
    log_json.push_back({{"iteration", rec.iteration},
                        {"mean_return", rec.mean_return},
                        {"loss", rec.loss}});
  }
  j["log"] = log_json;
  return j;
}

TrainedAgent TrainedAgent::from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != 1) fail(Errc::ParseError, "unknown checkpoint version");
  TrainedAgent agent;
  agent.spec = spec_from_json(j.at("spec"));
  agent.state_dim = j.at("state_dim").get<int>();
  agent.action_dim = j.at("action_dim").get<int>();
  agent.action_scale = j.at("action_scale").get<double>();
  agent.action_levels = j.at("action_levels").get<std::vector<double>>();
  agent.norm.mean = j.at("norm").at("mean").get<std::vector<double>>();
  agent.norm.m2 = j.at("norm").at("m2").get<std::vector<double>>();
  agent.norm.count = j.at("norm").at("count").get<double>();
  if (j.contains("policy_params")) {
    const auto params = j.at("policy_params").get<std::vector<double>>();
    agent.policy = std::make_shared<GaussianPolicy>(
        agent.state_dim, agent.spec.hidden, agent.action_dim,
        agent.spec.algorithm != Algorithm::Sac, agent.spec.init_log_std);
    agent.policy->set_params(params);
  }
  agent.value_params = j.at("value_params").get<std::vector<double>>();
  agent.critic1_params = j.at("critic1_params").get<std::vector<double>>();
  agent.critic2_params = j.at("critic2_params").get<std::vector<double>>();
  agent.q_params = j.at("q_params").get<std::vector<double>>();
  agent.updates = j.at("updates").get<std::uint64_t>();
  for (const auto& rec : j.at("log")) {
    agent.log.push_back({rec.at("iteration").get<int>(), rec.at("mean_return").get<double>(),
                         rec.at("loss").get<double>()});
  }
  return agent;
}

void TrainedAgent::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write checkpoint: " + path);
  out << to_json().dump(2) << '\n';
}

TrainedAgent TrainedAgent::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot read checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

void hard_sync(std::span<double> target, std::span<const double> online) {
  if (target.size() != online.size()) fail(Errc::DimensionMismatch, "sync size mismatch");
  std::copy(online.begin(), online.end(), target.begin());
}

void polyak_update(std::span<double> target, std::span<const double> online, double tau) {
  if (target.size() != online.size()) fail(Errc::DimensionMismatch, "sync size mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] = (1.0 - tau) * target[i] + tau * online[i];
  }
}

double ppo_clip_objective(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

double double_dqn_target(std::span<const double> q_online_next,
                         std::span<const double> q_target_next) {
  if (q_online_next.size() != q_target_next.size() || q_online_next.empty()) {
    fail(Errc::DimensionMismatch, "double dqn q-vector mismatch");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < q_online_next.size(); ++i) {
    if (q_online_next[i] > q_online_next[best]) best = i;
  }
  return q_target_next[best];
}

DiscreteTradingEnv::DiscreteTradingEnv(env::TradingEnv env) : env_(std::move(env)) {
  if (env_.num_assets() != 1) {
    fail(Errc::InvalidArgument, "discrete trading adapter supports single-asset data");
  }
  if (env_.config().action_mode != env::ActionMode::Discrete) {
    fail(Errc::ConfigError, "discrete adapter needs a discrete-mode env config");
  }
}

std::vector<double> DiscreteTradingEnv::reset() { return env_.reset().flatten(); }

DiscreteEnv::StepOut DiscreteTradingEnv::step(int action) {
  const auto& levels = env_.config().action_levels;
  if (action < 0 || action >= static_cast<int>(levels.size())) {
    fail(Errc::InvalidArgument, "discrete action index out of range");
  }
  const env::StepResult r = env_.step({levels[static_cast<std::size_t>(action)]});
  return {env_.state().flatten(), r.reward, r.done};
}

}  // namespace finbench::rl
