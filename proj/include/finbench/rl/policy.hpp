#pragma once

#include <span>
#include <vector>

#include "finbench/rl/mlp.hpp"
#include "finbench/util/rng.hpp"

namespace finbench::rl {

// Diagonal Gaussian policy: an MLP produces the mean, log-stddevs are free
// state-independent parameters appended to the flat vector. With
// `squash_mean` the mean net ends in tanh (actions live in [-1, 1] before
// env scaling); the squashed-sample variant used by soft actor-critic keeps
// the mean unsquashed and applies tanh to samples instead.
class GaussianPolicy {
 public:
  GaussianPolicy(int state_dim, const std::vector<int>& hidden, int action_dim,
                 bool squash_mean = true, double init_log_std = -0.7);

  int state_dim() const { return net_.input_dim(); }
  int action_dim() const { return action_dim_; }
  int param_count() const { return net_.param_count() + action_dim_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  void set_params(std::span<const double> p);

  void init(Rng& rng);

  void mean(std::span<const double> state, std::span<double> mu) const;
  double log_std(int i) const { return params_[net_.param_count() + i]; }
  double stddev(int i) const { return std::exp(log_std(i)); }

  // Samples a ~ N(mu(s), sigma^2) and returns log pi(a|s).
  double sample(std::span<const double> state, std::span<double> action, Rng& rng) const;

  double log_prob(std::span<const double> state, std::span<const double> action) const;

  // Accumulates weight * d(log pi(a|s))/d(theta) into grad.
  void log_prob_backward(std::span<const double> state, std::span<const double> action,
                         double weight, std::span<double> grad) const;

  // Accumulates dmu^T d(mu(s))/d(theta) into grad (mean-net path only);
  // log-std slots are untouched.
  void mean_backward(std::span<const double> state, std::span<const double> dmu,
                     std::span<double> grad) const;

  // Gaussian entropy: sum_k (log sigma_k + 0.5 log(2 pi e)).
  double entropy() const;
  // d(entropy)/d(log_std_k) = 1; accumulates weight into the log-std slots.
  void entropy_backward(double weight, std::span<double> grad) const;

  const Mlp& net() const { return net_; }
  // Offset of the log-std block inside the flat parameter vector.
  int log_std_offset() const { return net_.param_count(); }

 private:
  Mlp net_;
  int action_dim_;
  std::vector<double> params_;
  double init_log_std_;
};

// KL(P || Q) between the policies' action distributions at one state.
double kl_divergence_gaussian(std::span<const double> mu_p, std::span<const double> sigma_p,
                              std::span<const double> mu_q, std::span<const double> sigma_q);

}  // namespace finbench::rl
