#include <algorithm>
#include <cmath>
#include <vector>

#include "finbench/rl/adam.hpp"
#include "finbench/rl/agents.hpp"
#include "finbench/rl/losses.hpp"
#include "finbench/rl/replay.hpp"
#include "finbench/util/error.hpp"

namespace finbench::rl {

namespace {

std::vector<int> critic_sizes(int state_dim, int action_dim, const std::vector<int>& hidden) {
  std::vector<int> sizes;
  sizes.push_back(state_dim + action_dim);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(1);
  return sizes;
}

double critic_value(const Mlp& net, std::span<const double> params,
                    std::span<const double> state, std::span<const double> action,
                    std::vector<double>& input) {
  input.assign(state.begin(), state.end());
  input.insert(input.end(), action.begin(), action.end());
  double q = 0.0;
  net.forward(params, input, std::span<double>(&q, 1));
  return q;
}

// DDPG / SAC over the vectorized continuous environment.
TrainedAgent train_continuous_off_policy(const AgentSpec& spec, env::VecEnv& venv, int steps) {
  const bool sac = spec.algorithm == Algorithm::Sac;
  const int n = venv.size();
  const int ds = venv.state_dim();
  const int da = venv.action_dim();

  TrainedAgent agent;
  agent.spec = spec;
  agent.state_dim = ds;
  agent.action_dim = da;
  agent.action_scale = venv.sub_env(0).config().max_shares_per_trade;
  agent.norm.reset(ds);
  agent.policy = std::make_shared<GaussianPolicy>(ds, spec.hidden, da, !sac, spec.init_log_std);

  Rng init_rng = Rng::stream(spec.seed, "offpolicy-init");
  agent.policy->init(init_rng);

  const Mlp critic_net(critic_sizes(ds, da, spec.hidden));
  agent.critic1_params.assign(critic_net.param_count(), 0.0);
  critic_net.init_params(agent.critic1_params, init_rng);
  std::vector<double> critic1_target = agent.critic1_params;
  std::vector<double> critic2_target;
  if (sac) {
    agent.critic2_params.assign(critic_net.param_count(), 0.0);
    critic_net.init_params(agent.critic2_params, init_rng);
    critic2_target = agent.critic2_params;
  }
  GaussianPolicy actor_target(ds, spec.hidden, da, !sac, spec.init_log_std);
  actor_target.set_params(agent.policy->params());

  Adam actor_opt(agent.policy->param_count(), spec.learning_rate);
  Adam critic1_opt(critic_net.param_count(), spec.learning_rate);
  Adam critic2_opt(critic_net.param_count(), spec.learning_rate);

  ReplayBuffer replay(spec.replay_capacity, ds, da);
  Rng replay_rng = Rng::stream(spec.seed, "offpolicy-replay");
  Rng update_rng = Rng::stream(spec.seed, "offpolicy-update");
  std::vector<Rng> act_rng;
  for (int row = 0; row < n; ++row) {
    act_rng.push_back(Rng::stream(spec.seed, "offpolicy-act", row));
  }

  std::vector<double> states(static_cast<std::size_t>(n) * ds);
  std::vector<double> next_states(static_cast<std::size_t>(n) * ds);
  std::vector<double> rewards(n);
  std::vector<std::uint8_t> dones(n);
  std::vector<double> env_actions(static_cast<std::size_t>(n) * da);
  std::vector<double> policy_actions(static_cast<std::size_t>(n) * da);
  std::vector<std::uint8_t> row_live(n, 1);
  std::vector<double> episode_return(n, 0.0);

  venv.batch_reset(states);

  std::vector<double> critic_grad(critic_net.param_count());
  std::vector<double> actor_grad(agent.policy->param_count());
  std::vector<double> input_scratch;
  std::vector<int> batch_idx;
  double last_loss = 0.0;

  for (int step = 0; step < steps; ++step) {
    for (int row = 0; row < n; ++row) {
      if (!row_live[row]) continue;
      const auto s = std::span<const double>(states.data() + static_cast<std::size_t>(row) * ds,
                                             static_cast<std::size_t>(ds));
      const std::vector<double> ns = agent.norm.normalize(s);
      auto a = std::span<double>(policy_actions.data() + static_cast<std::size_t>(row) * da,
                                 static_cast<std::size_t>(da));
      if (sac) {
        agent.policy->sample(ns, a, act_rng[row]);
        for (double& v : a) v = std::tanh(v);
      } else {
        agent.policy->mean(ns, a);
        for (double& v : a) {
          v = std::clamp(v + spec.exploration_noise * act_rng[row].normal(), -1.0, 1.0);
        }
      }
      for (int k = 0; k < da; ++k) {
        env_actions[static_cast<std::size_t>(row) * da + k] = a[k] * agent.action_scale;
      }
    }

    venv.batch_step(env_actions, next_states, rewards, dones);

    for (int row = 0; row < n; ++row) {
      if (!row_live[row]) continue;
      const auto s = std::span<const double>(states.data() + static_cast<std::size_t>(row) * ds,
                                             static_cast<std::size_t>(ds));
      const auto sp =
          std::span<const double>(next_states.data() + static_cast<std::size_t>(row) * ds,
                                  static_cast<std::size_t>(ds));
      const auto a =
          std::span<const double>(policy_actions.data() + static_cast<std::size_t>(row) * da,
                                  static_cast<std::size_t>(da));
      replay.push(s, a, rewards[row], sp, dones[row] != 0);
      agent.norm.update(s);
      episode_return[row] += rewards[row];
      if (dones[row] != 0) row_live[row] = 0;
    }
    states = next_states;

    bool all_done = true;
    for (int row = 0; row < n; ++row) all_done = all_done && row_live[row] == 0;
    if (all_done) {
      double mean_ret = 0.0;
      for (double r : episode_return) mean_ret += r;
      agent.log.push_back({step, mean_ret / n, last_loss});
      venv.batch_reset(states);
      std::fill(row_live.begin(), row_live.end(), 1);
      std::fill(episode_return.begin(), episode_return.end(), 0.0);
    }

    if (replay.size() < static_cast<std::size_t>(std::max(spec.warmup_steps, spec.batch_size))) {
      continue;
    }

    replay.sample_indices(spec.batch_size, replay_rng, batch_idx);
    const int b = spec.batch_size;

    // Frozen targets, then critic regression on [s; a] -> y.
    std::vector<std::vector<double>> critic_inputs(b);
    std::vector<double> targets(b);
    std::vector<std::vector<double>> actor_states(b);
    for (int i = 0; i < b; ++i) {
      const int idx = batch_idx[i];
      const std::vector<double> sn = agent.norm.normalize(replay.state(idx));
      const std::vector<double> spn = agent.norm.normalize(replay.next_state(idx));
      double bootstrap = 0.0;
      if (!replay.done(idx)) {
        if (sac) {
          std::vector<double> mu(da), noise(da), u(da), ap(da);
          agent.policy->mean(spn, mu);
          for (int k = 0; k < da; ++k) {
            noise[k] = update_rng.normal();
            u[k] = mu[k] + agent.policy->stddev(k) * noise[k];
            ap[k] = std::tanh(u[k]);
          }
          const double q1 = critic_value(critic_net, critic1_target, spn, ap, input_scratch);
          const double q2 = critic_value(critic_net, critic2_target, spn, ap, input_scratch);
          const double lp = squashed_gaussian_log_prob(*agent.policy, noise, u);
          bootstrap = std::min(q1, q2) - spec.sac_alpha * lp;
        } else {
          std::vector<double> ap(da);
          actor_target.mean(spn, ap);
          bootstrap = critic_value(critic_net, critic1_target, spn, ap, input_scratch);
        }
      }
      targets[i] = replay.reward(idx) + spec.gamma * bootstrap;

      critic_inputs[i] = sn;
      const auto a = replay.action(idx);
      critic_inputs[i].insert(critic_inputs[i].end(), a.begin(), a.end());
      actor_states[i] = std::move(sn);
    }

    std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
    last_loss = mse_loss_and_grad(critic_net, agent.critic1_params, critic_inputs, targets,
                                  critic_grad);
    if (!std::isfinite(last_loss)) fail(Errc::InvalidArgument, "critic loss diverged");
    critic1_opt.step(agent.critic1_params, critic_grad);
    if (sac) {
      std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
      const double l2 = mse_loss_and_grad(critic_net, agent.critic2_params, critic_inputs,
                                          targets, critic_grad);
      if (!std::isfinite(l2)) fail(Errc::InvalidArgument, "critic loss diverged");
      critic2_opt.step(agent.critic2_params, critic_grad);
    }

    std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
    double actor_loss;
    if (sac) {
      std::vector<std::vector<double>> noise(b, std::vector<double>(da));
      for (auto& row : noise) {
        for (double& x : row) x = update_rng.normal();
      }
      actor_loss = sac_actor_loss_and_grad(*agent.policy, critic_net, agent.critic1_params,
                                           agent.critic2_params, actor_states, noise,
                                           spec.sac_alpha, actor_grad);
    } else {
      actor_loss = ddpg_actor_loss_and_grad(*agent.policy, critic_net, agent.critic1_params,
                                            actor_states, actor_grad);
    }
    if (!std::isfinite(actor_loss)) fail(Errc::InvalidArgument, "actor loss diverged");
    actor_opt.step(agent.policy->params(), actor_grad);
    agent.updates += sac ? 3 : 2;

    polyak_update(critic1_target, agent.critic1_params, spec.polyak);
    if (sac) {
      polyak_update(critic2_target, agent.critic2_params, spec.polyak);
    } else {
      polyak_update(actor_target.params(), agent.policy->params(), spec.polyak);
    }
  }
  return agent;
}

}  // namespace

TrainedAgent train_off_policy(const AgentSpec& spec, env::VecEnv& venv, int steps) {
  spec.validate();
  if (spec.algorithm != Algorithm::Ddpg && spec.algorithm != Algorithm::Sac) {
    fail(Errc::ConfigError, "continuous off-policy training handles ddpg and sac");
  }
  return train_continuous_off_policy(spec, venv, steps);
}

TrainedAgent train_off_policy(const AgentSpec& spec, DiscreteEnv& den, int steps) {
  spec.validate();
  if (!is_value_based(spec.algorithm)) {
    fail(Errc::ConfigError, "discrete off-policy training handles the dqn family");
  }
  const int ds = den.state_dim();
  const int levels = den.num_actions();

  TrainedAgent agent;
  agent.spec = spec;
  agent.state_dim = ds;
  agent.action_dim = 1;
  agent.action_levels = den.action_values();
  agent.norm.reset(ds);

  const auto qnet =
      make_q_network(spec.algorithm == Algorithm::DuelingDqn, ds, spec.hidden, levels);
  agent.q_params.assign(qnet->param_count(), 0.0);
  Rng init_rng = Rng::stream(spec.seed, "dqn-init");
  qnet->init(agent.q_params, init_rng);
  std::vector<double> target_params = agent.q_params;

  Adam opt(qnet->param_count(), spec.learning_rate);
  ReplayBuffer replay(spec.replay_capacity, ds, 1);
  Rng act_rng = Rng::stream(spec.seed, "dqn-act");
  Rng replay_rng = Rng::stream(spec.seed, "dqn-replay");

  std::vector<double> grad(qnet->param_count());
  std::vector<double> q(levels);
  std::vector<int> batch_idx;
  std::vector<TdSample> batch(spec.batch_size);

  const auto greedy = [&](std::span<const double> ns) {
    qnet->forward(agent.q_params, ns, q);
    int best = 0;
    for (int i = 1; i < levels; ++i) {
      if (q[i] > q[best]) best = i;
    }
    return best;
  };

  std::vector<double> state = den.reset();
  int episode_steps = 0;
  double episode_return = 0.0;
  double last_loss = 0.0;

  for (int step = 1; step <= steps; ++step) {
    const double frac =
        std::min(1.0, static_cast<double>(step) / std::max(1, spec.epsilon_anneal_steps));
    const double eps = spec.epsilon_initial + frac * (spec.epsilon - spec.epsilon_initial);

    int action;
    if (act_rng.uniform01() < eps) {
      action = act_rng.uniform_int(levels);
    } else {
      action = greedy(agent.norm.normalize(state));
    }

    DiscreteEnv::StepOut out = den.step(action);
    const double a_val = action;
    replay.push(state, std::span<const double>(&a_val, 1), out.reward, out.state, out.done);
    agent.norm.update(state);
    episode_return += out.reward;
    ++episode_steps;

    if (out.done || (spec.max_episode_steps > 0 && episode_steps >= spec.max_episode_steps)) {
      agent.log.push_back({step, episode_return, last_loss});
      state = den.reset();
      episode_steps = 0;
      episode_return = 0.0;
    } else {
      state = std::move(out.state);
    }

    if (replay.size() >= static_cast<std::size_t>(std::max(spec.warmup_steps, spec.batch_size))) {
      replay.sample_indices(spec.batch_size, replay_rng, batch_idx);
      for (int i = 0; i < spec.batch_size; ++i) {
        const int idx = batch_idx[i];
        batch[i].state = agent.norm.normalize(replay.state(idx));
        batch[i].next_state = agent.norm.normalize(replay.next_state(idx));
        batch[i].action = static_cast<int>(replay.action(idx)[0]);
        batch[i].reward = replay.reward(idx);
        batch[i].done = replay.done(idx);
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      last_loss = dqn_td_loss_and_grad(*qnet, agent.q_params, target_params, batch, spec.gamma,
                                       spec.algorithm == Algorithm::DoubleDqn, grad);
      if (!std::isfinite(last_loss)) fail(Errc::InvalidArgument, "dqn loss diverged");
      opt.step(agent.q_params, grad);
      ++agent.updates;
    }

    if (step % spec.target_sync_interval == 0) hard_sync(target_params, agent.q_params);
  }
  return agent;
}

}  // namespace finbench::rl
