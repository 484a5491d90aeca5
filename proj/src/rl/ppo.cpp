#include <algorithm>
#include <cmath>
#include <vector>

#include "finbench/rl/adam.hpp"
#include "finbench/rl/agents.hpp"
#include "finbench/util/error.hpp"

namespace finbench::rl {

namespace {

struct PpoRolloutPolicy final : env::RolloutPolicy {
  const GaussianPolicy* policy = nullptr;
  const RunningNorm* norm = nullptr;
  double scale = 1.0;

  int action_dim() const override { return policy->action_dim(); }
  bool stochastic() const override { return true; }

  double act(std::span<const double> state, std::span<double> action, Rng& rng) const override {
    return policy->sample(norm->normalize(state), action, rng);
  }

  void to_env_action(std::span<const double> raw, std::span<double> env_action) const override {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      env_action[i] = std::clamp(raw[i], -1.0, 1.0) * scale;
    }
  }
};

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng.uniform_int(i + 1)]);
  }
}

}  // namespace

TrainedAgent train_on_policy(const AgentSpec& spec, env::VecEnv& venv, int iterations,
                             const DiversityPenalty* diversity) {
  spec.validate();
  if (spec.algorithm != Algorithm::Ppo) {
    fail(Errc::ConfigError, "train_on_policy handles the ppo algorithm");
  }
  const int ds = venv.state_dim();
  const int da = venv.action_dim();
  const int horizon = std::min(spec.rollout_horizon, venv.horizon());

  TrainedAgent agent;
  agent.spec = spec;
  agent.state_dim = ds;
  agent.action_dim = da;
  agent.action_scale = venv.sub_env(0).config().max_shares_per_trade;
  agent.norm.reset(ds);
  agent.policy =
      std::make_shared<GaussianPolicy>(ds, spec.hidden, da, true, spec.init_log_std);

  std::vector<int> value_sizes;
  value_sizes.push_back(ds);
  for (int h : spec.hidden) value_sizes.push_back(h);
  value_sizes.push_back(1);
  Mlp value_net(value_sizes);
  agent.value_params.assign(value_net.param_count(), 0.0);

  Rng init_rng = Rng::stream(spec.seed, "ppo-init");
  agent.policy->init(init_rng);
  value_net.init_params(agent.value_params, init_rng);

  Adam policy_opt(agent.policy->param_count(), spec.learning_rate);
  Adam value_opt(value_net.param_count(), spec.learning_rate);

  PpoRolloutPolicy rollout;
  rollout.policy = agent.policy.get();
  rollout.norm = &agent.norm;
  rollout.scale = agent.action_scale;

  // Prime the normalizer so the first training batch sees scaled inputs.
  {
    const auto prime = venv.collect(rollout, horizon, Rng::derive_seed(spec.seed, "ppo-prime"));
    for (int j = 0; j < prime.n; ++j) {
      for (int t = 0; t < prime.lengths[j]; ++t) agent.norm.update(prime.state(j, t));
    }
  }

  Rng shuffle_rng = Rng::stream(spec.seed, "ppo-shuffle");
  std::vector<double> policy_grad(agent.policy->param_count());
  std::vector<double> value_grad(value_net.param_count());

  for (int iter = 0; iter < iterations; ++iter) {
    const env::TrajectoryBatch batch =
        venv.collect(rollout, horizon, Rng::derive_seed(spec.seed, "ppo-rollout", iter));

    for (int j = 0; j < batch.n; ++j) {
      for (int t = 0; t < batch.lengths[j]; ++t) agent.norm.update(batch.state(j, t));
    }

    // Flatten valid steps; recompute log-probs and values under the frozen,
    // freshly updated normalization so ratios start from a consistent base.
    struct Sample {
      int row, t;
    };
    std::vector<Sample> samples;
    for (int j = 0; j < batch.n; ++j) {
      for (int t = 0; t < batch.lengths[j]; ++t) samples.push_back({j, t});
    }
    const int n_samples = static_cast<int>(samples.size());
    std::vector<double> norm_states(static_cast<std::size_t>(n_samples) * ds);
    std::vector<double> logp_old(n_samples), values(n_samples);
    for (int i = 0; i < n_samples; ++i) {
      const auto ns = std::span<double>(norm_states.data() + static_cast<std::size_t>(i) * ds,
                                        static_cast<std::size_t>(ds));
      agent.norm.normalize(batch.state(samples[i].row, samples[i].t), ns);
      logp_old[i] = agent.policy->log_prob(ns, batch.action(samples[i].row, samples[i].t));
      double v = 0.0;
      value_net.forward(agent.value_params, ns, std::span<double>(&v, 1));
      values[i] = v;
    }

    // GAE per row, bootstrapping from the value of the post-rollout state on
    // truncation (episode not done at the last collected step).
    std::vector<double> advantages(n_samples), returns_(n_samples);
    {
      int offset = 0;
      for (int j = 0; j < batch.n; ++j) {
        const int len = batch.lengths[j];
        double bootstrap = 0.0;
        if (len > 0 && !batch.done(j, len - 1)) {
          const auto final_state = venv.sub_env(j).state().flatten();
          double v = 0.0;
          value_net.forward(agent.value_params, agent.norm.normalize(final_state),
                            std::span<double>(&v, 1));
          bootstrap = v;
        }
        double acc = 0.0;
        for (int t = len - 1; t >= 0; --t) {
          const double nonterminal = batch.done(j, t) ? 0.0 : 1.0;
          const double v_next = (t == len - 1) ? bootstrap : values[offset + t + 1];
          const double delta = batch.reward(j, t) + spec.gamma * nonterminal * v_next -
                               values[offset + t];
          acc = delta + spec.gamma * spec.gae_lambda * nonterminal * acc;
          advantages[offset + t] = acc;
          returns_[offset + t] = acc + values[offset + t];
        }
        offset += len;
      }
    }
    {
      double m = 0.0, s = 0.0;
      for (double a : advantages) m += a;
      m /= std::max(n_samples, 1);
      for (double a : advantages) s += (a - m) * (a - m);
      s = std::sqrt(s / std::max(n_samples, 1));
      if (s > 1e-8) {
        for (double& a : advantages) a = (a - m) / s;
      } else {
        for (double& a : advantages) a -= m;
      }
    }

    std::vector<int> order(n_samples);
    for (int i = 0; i < n_samples; ++i) order[i] = i;

    double last_loss = 0.0;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      shuffle_indices(order, shuffle_rng);
      for (int start = 0; start < n_samples; start += spec.batch_size) {
        const int end = std::min(start + spec.batch_size, n_samples);
        const int b = end - start;
        std::fill(policy_grad.begin(), policy_grad.end(), 0.0);
        std::fill(value_grad.begin(), value_grad.end(), 0.0);
        double loss = 0.0;
        for (int pos = start; pos < end; ++pos) {
          const int i = order[pos];
          const auto ns =
              std::span<const double>(norm_states.data() + static_cast<std::size_t>(i) * ds,
                                      static_cast<std::size_t>(ds));
          const auto action = batch.action(samples[i].row, samples[i].t);
          const double logp_new = agent.policy->log_prob(ns, action);
          const double ratio = std::exp(logp_new - logp_old[i]);
          const double adv = advantages[i];
          const double objective = ppo_clip_objective(ratio, adv, spec.clip);
          loss += -objective / b;
          // Active-branch subgradient: the clipped branch is flat in theta.
          const double clipped = std::clamp(ratio, 1.0 - spec.clip, 1.0 + spec.clip) * adv;
          const double dobj_dlogp = (ratio * adv <= clipped) ? adv * ratio : 0.0;
          if (dobj_dlogp != 0.0) {
            agent.policy->log_prob_backward(ns, action, -dobj_dlogp / b, policy_grad);
          }

          Mlp::Cache cache;
          double v = 0.0;
          value_net.forward_cached(agent.value_params, ns, std::span<double>(&v, 1), cache);
          const double vdiff = v - returns_[i];
          loss += spec.value_coef * vdiff * vdiff / b;
          const double dv = spec.value_coef * 2.0 * vdiff / b;
          value_net.backward(agent.value_params, cache, std::span<const double>(&dv, 1),
                             value_grad);

          if (diversity != nullptr && diversity->lambda > 0.0 && !diversity->peers.empty()) {
            // KL(pi_B || pi_A) per dim: log(sA/sB) + (sB^2 + (muB - muA)^2) /
            // (2 sA^2) - 1/2; the regularizer is maximized, so it enters the
            // loss with a minus sign.
            std::vector<double> mu_a(da), mu_b(da), dmu(da, 0.0);
            agent.policy->mean(ns, mu_a);
            const double scale = diversity->lambda / b;
            for (const PeerPolicy& peer : diversity->peers) {
              peer.policy->mean(ns, mu_b);
              for (int k = 0; k < da; ++k) {
                const double sa = agent.policy->stddev(k);
                const double sb = peer.sigma_override ? *peer.sigma_override
                                                      : peer.policy->stddev(k);
                const double diff = mu_b[k] - mu_a[k];
                loss -= scale * (std::log(sa / sb) +
                                 (sb * sb + diff * diff) / (2.0 * sa * sa) - 0.5);
                dmu[k] += scale * diff / (sa * sa);
                policy_grad[agent.policy->log_std_offset() + k] -=
                    scale * (1.0 - (sb * sb + diff * diff) / (sa * sa));
              }
            }
            agent.policy->mean_backward(ns, dmu, policy_grad);
          }
        }
        if (spec.entropy_coef > 0.0) {
          loss -= spec.entropy_coef * agent.policy->entropy();
          agent.policy->entropy_backward(-spec.entropy_coef, policy_grad);
        }
        if (!std::isfinite(loss)) fail(Errc::InvalidArgument, "ppo loss diverged");
        policy_opt.step(agent.policy->params(), policy_grad);
        value_opt.step(agent.value_params, value_grad);
        ++agent.updates;
        last_loss = loss;
      }
    }

    double mean_return = 0.0;
    for (int j = 0; j < batch.n; ++j) mean_return += batch.undiscounted_return(j);
    mean_return /= batch.n;
    agent.log.push_back({iter, mean_return, last_loss});
  }
  return agent;
}

}  // namespace finbench::rl
