#pragma once

#include <span>
#include <vector>

#include "finbench/rl/mlp.hpp"
#include "finbench/rl/policy.hpp"
#include "finbench/rl/qnet.hpp"

namespace finbench::rl {

// Loss/gradient assemblies shared by the trainers. Each returns the scalar
// loss and accumulates d(loss)/d(params) into `grad`, which makes them
// directly checkable against central finite differences.

// Mean squared error of a scalar-output net over a fixed input batch.
double mse_loss_and_grad(const Mlp& net, std::span<const double> params,
                         const std::vector<std::vector<double>>& inputs,
                         std::span<const double> targets, std::span<double> grad);

struct TdSample {
  std::vector<double> state;
  std::vector<double> next_state;
  int action = 0;
  double reward = 0.0;
  bool done = false;
};

// One TD minibatch: loss = mean (Q(s)[a] - y)^2 with
// y = r + gamma * (1 - done) * bootstrap; the bootstrap comes from the target
// network (double variant evaluates the online argmax under the target net).
double dqn_td_loss_and_grad(const QNetwork& qnet, std::span<const double> params,
                            std::span<const double> target_params,
                            std::span<const TdSample> batch, double gamma, bool double_dqn,
                            std::span<double> grad);

// Deterministic-actor objective: loss = -mean Q(s, mu(s)); the critic is
// frozen, gradients flow through the action input into the actor.
double ddpg_actor_loss_and_grad(const GaussianPolicy& policy, const Mlp& critic_net,
                                std::span<const double> critic_params,
                                const std::vector<std::vector<double>>& states,
                                std::span<double> grad);

// Reparameterized squashed-Gaussian actor loss with frozen per-sample noise:
// loss = mean [alpha * log pi(a|s) - min(Q1, Q2)(s, a)], a = tanh(mu + sigma*xi).
double sac_actor_loss_and_grad(const GaussianPolicy& policy, const Mlp& critic_net,
                               std::span<const double> q1_params,
                               std::span<const double> q2_params,
                               const std::vector<std::vector<double>>& states,
                               const std::vector<std::vector<double>>& noise, double alpha,
                               std::span<double> grad);

// log pi(a|s) of the tanh-squashed Gaussian given the pre-squash sample.
double squashed_gaussian_log_prob(const GaussianPolicy& policy,
                                  std::span<const double> noise,
                                  std::span<const double> pre_tanh);

}  // namespace finbench::rl
