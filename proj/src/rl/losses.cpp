#include "finbench/rl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "finbench/rl/agents.hpp"
#include "finbench/util/error.hpp"

namespace finbench::rl {

namespace {

constexpr double kTanhEps = 1e-6;

}  // namespace

double mse_loss_and_grad(const Mlp& net, std::span<const double> params,
                         const std::vector<std::vector<double>>& inputs,
                         std::span<const double> targets, std::span<double> grad) {
  if (net.output_dim() != 1 || inputs.size() != targets.size() || inputs.empty()) {
    fail(Errc::DimensionMismatch, "mse loss shape mismatch");
  }
  const double inv_b = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;
  Mlp::Cache cache;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    double y = 0.0;
    net.forward_cached(params, inputs[i], std::span<double>(&y, 1), cache);
    const double diff = y - targets[i];
    loss += diff * diff * inv_b;
    const double dy = 2.0 * diff * inv_b;
    net.backward(params, cache, std::span<const double>(&dy, 1), grad);
  }
  return loss;
}

double dqn_td_loss_and_grad(const QNetwork& qnet, std::span<const double> params,
                            std::span<const double> target_params,
                            std::span<const TdSample> batch, double gamma, bool double_dqn,
                            std::span<double> grad) {
  if (batch.empty()) fail(Errc::InvalidArgument, "empty td batch");
  const int levels = qnet.num_actions();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> q(levels), q_target(levels), q_online(levels), dq(levels);
  double loss = 0.0;
  for (const TdSample& sample : batch) {
    double bootstrap = 0.0;
    if (!sample.done) {
      qnet.forward(target_params, sample.next_state, q_target);
      if (double_dqn) {
        qnet.forward(params, sample.next_state, q_online);
        bootstrap = double_dqn_target(q_online, q_target);
      } else {
        bootstrap = *std::max_element(q_target.begin(), q_target.end());
      }
    }
    const double y = sample.reward + gamma * bootstrap;
    qnet.forward(params, sample.state, q);
    const double diff = q[sample.action] - y;
    loss += diff * diff * inv_b;
    std::fill(dq.begin(), dq.end(), 0.0);
    dq[sample.action] = 2.0 * diff * inv_b;
    qnet.backward(params, sample.state, dq, grad);
  }
  return loss;
}

double ddpg_actor_loss_and_grad(const GaussianPolicy& policy, const Mlp& critic_net,
                                std::span<const double> critic_params,
                                const std::vector<std::vector<double>>& states,
                                std::span<double> grad) {
  if (states.empty()) fail(Errc::InvalidArgument, "empty state batch");
  const int ds = policy.state_dim();
  const int da = policy.action_dim();
  const double inv_b = 1.0 / static_cast<double>(states.size());
  std::vector<double> mu(da), input(ds + da), dx(ds + da);
  std::vector<double> critic_scratch(critic_net.param_count());
  Mlp::Cache cache;
  double loss = 0.0;
  for (const auto& state : states) {
    policy.mean(state, mu);
    input.assign(state.begin(), state.end());
    input.insert(input.end(), mu.begin(), mu.end());
    double q = 0.0;
    critic_net.forward_cached(critic_params, input, std::span<double>(&q, 1), cache);
    loss += -q * inv_b;
    const double dq = -inv_b;
    critic_net.backward(critic_params, cache, std::span<const double>(&dq, 1), critic_scratch,
                        dx);
    policy.mean_backward(state, std::span<const double>(dx.data() + ds, da), grad);
  }
  return loss;
}

double squashed_gaussian_log_prob(const GaussianPolicy& policy,
                                  std::span<const double> noise,
                                  std::span<const double> pre_tanh) {
  double lp = 0.0;
  for (std::size_t k = 0; k < noise.size(); ++k) {
    lp += -0.5 * noise[k] * noise[k] - policy.log_std(static_cast<int>(k)) -
          0.5 * std::log(2.0 * std::numbers::pi);
    const double t = std::tanh(pre_tanh[k]);
    lp -= std::log(1.0 - t * t + kTanhEps);
  }
  return lp;
}

double sac_actor_loss_and_grad(const GaussianPolicy& policy, const Mlp& critic_net,
                               std::span<const double> q1_params,
                               std::span<const double> q2_params,
                               const std::vector<std::vector<double>>& states,
                               const std::vector<std::vector<double>>& noise, double alpha,
                               std::span<double> grad) {
  if (states.empty() || states.size() != noise.size()) {
    fail(Errc::DimensionMismatch, "state/noise batch mismatch");
  }
  const int ds = policy.state_dim();
  const int da = policy.action_dim();
  const double inv_b = 1.0 / static_cast<double>(states.size());
  std::vector<double> mu(da), u(da), a(da), dmu(da);
  std::vector<double> input(ds + da), dx(ds + da);
  std::vector<double> critic_scratch(critic_net.param_count());
  Mlp::Cache cache;
  double loss = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& state = states[i];
    const auto& xi = noise[i];
    policy.mean(state, mu);
    for (int k = 0; k < da; ++k) {
      u[k] = mu[k] + policy.stddev(k) * xi[k];
      a[k] = std::tanh(u[k]);
    }
    input.assign(state.begin(), state.end());
    input.insert(input.end(), a.begin(), a.end());
    double q1 = 0.0, q2 = 0.0;
    critic_net.forward(q1_params, input, std::span<double>(&q1, 1));
    critic_net.forward(q2_params, input, std::span<double>(&q2, 1));
    const std::span<const double> q_min_params = q1 <= q2 ? q1_params : q2_params;
    const double q_min = std::min(q1, q2);
    const double lp = squashed_gaussian_log_prob(policy, xi, u);
    loss += (alpha * lp - q_min) * inv_b;

    // dL/da through the frozen minimum critic.
    double q = 0.0;
    critic_net.forward_cached(q_min_params, input, std::span<double>(&q, 1), cache);
    const double dq = -inv_b;
    critic_net.backward(q_min_params, cache, std::span<const double>(&dq, 1), critic_scratch,
                        dx);

    for (int k = 0; k < da; ++k) {
      const double t = std::tanh(u[k]);
      const double sech2 = 1.0 - t * t;
      // For fixed noise the Gaussian density term is constant in u; only the
      // tanh volume correction contributes.
      const double dlp_du = 2.0 * t * sech2 / (sech2 + kTanhEps);
      const double du = alpha * inv_b * dlp_du + dx[ds + k] * sech2;
      dmu[k] = du;
      grad[policy.log_std_offset() + k] +=
          -alpha * inv_b + du * policy.stddev(k) * xi[k];
    }
    policy.mean_backward(state, dmu, grad);
  }
  return loss;
}

}  // namespace finbench::rl
