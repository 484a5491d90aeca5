#include "finbench/rl/policy.hpp"

#include <cmath>
#include <numbers>

#include "finbench/util/error.hpp"

namespace finbench::rl {

namespace {

std::vector<int> layer_sizes(int state_dim, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.push_back(state_dim);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(out);
  return sizes;
}

}  // namespace

GaussianPolicy::GaussianPolicy(int state_dim, const std::vector<int>& hidden, int action_dim,
                               bool squash_mean, double init_log_std)
    : net_(layer_sizes(state_dim, hidden, action_dim), Activation::Tanh,
           squash_mean ? Activation::Tanh : Activation::Identity),
      action_dim_(action_dim),
      init_log_std_(init_log_std) {
  params_.assign(param_count(), 0.0);
  for (int i = 0; i < action_dim_; ++i) params_[net_.param_count() + i] = init_log_std_;
}

void GaussianPolicy::set_params(std::span<const double> p) {
  if (p.size() != params_.size()) fail(Errc::DimensionMismatch, "policy param size mismatch");
  params_.assign(p.begin(), p.end());
}

void GaussianPolicy::init(Rng& rng) {
  net_.init_params(std::span<double>(params_.data(), net_.param_count()), rng);
  for (int i = 0; i < action_dim_; ++i) params_[net_.param_count() + i] = init_log_std_;
}

void GaussianPolicy::mean(std::span<const double> state, std::span<double> mu) const {
  net_.forward(std::span<const double>(params_.data(), net_.param_count()), state, mu);
}

double GaussianPolicy::sample(std::span<const double> state, std::span<double> action,
                              Rng& rng) const {
  std::vector<double> mu(action_dim_);
  mean(state, mu);
  double lp = 0.0;
  for (int i = 0; i < action_dim_; ++i) {
    const double sigma = stddev(i);
    const double z = rng.normal();
    action[i] = mu[i] + sigma * z;
    lp += -0.5 * z * z - log_std(i) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

double GaussianPolicy::log_prob(std::span<const double> state,
                                std::span<const double> action) const {
  std::vector<double> mu(action_dim_);
  mean(state, mu);
  double lp = 0.0;
  for (int i = 0; i < action_dim_; ++i) {
    const double sigma = stddev(i);
    const double z = (action[i] - mu[i]) / sigma;
    lp += -0.5 * z * z - log_std(i) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

void GaussianPolicy::log_prob_backward(std::span<const double> state,
                                       std::span<const double> action, double weight,
                                       std::span<double> grad) const {
  if (grad.size() != params_.size()) fail(Errc::DimensionMismatch, "grad size mismatch");
  std::vector<double> mu(action_dim_);
  Mlp::Cache cache;
  const std::span<const double> net_params(params_.data(), net_.param_count());
  net_.forward_cached(net_params, state, mu, cache);

  std::vector<double> dmu(action_dim_);
  for (int i = 0; i < action_dim_; ++i) {
    const double sigma = stddev(i);
    const double z = (action[i] - mu[i]) / sigma;
    // d log pi / d mu_i = z / sigma; d log pi / d log_std_i = z^2 - 1.
    dmu[i] = weight * z / sigma;
    grad[net_.param_count() + i] += weight * (z * z - 1.0);
  }
  net_.backward(net_params, cache, dmu, grad.subspan(0, net_.param_count()));
}

void GaussianPolicy::mean_backward(std::span<const double> state,
                                   std::span<const double> dmu,
                                   std::span<double> grad) const {
  if (grad.size() != params_.size()) fail(Errc::DimensionMismatch, "grad size mismatch");
  std::vector<double> mu(action_dim_);
  Mlp::Cache cache;
  const std::span<const double> net_params(params_.data(), net_.param_count());
  net_.forward_cached(net_params, state, mu, cache);
  net_.backward(net_params, cache, dmu, grad.subspan(0, net_.param_count()));
}

double GaussianPolicy::entropy() const {
  double h = 0.0;
  for (int i = 0; i < action_dim_; ++i) {
    h += log_std(i) + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  }
  return h;
}

void GaussianPolicy::entropy_backward(double weight, std::span<double> grad) const {
  for (int i = 0; i < action_dim_; ++i) grad[net_.param_count() + i] += weight;
}

double kl_divergence_gaussian(std::span<const double> mu_p, std::span<const double> sigma_p,
                              std::span<const double> mu_q, std::span<const double> sigma_q) {
  if (mu_p.size() != mu_q.size() || sigma_p.size() != sigma_q.size() ||
      mu_p.size() != sigma_p.size()) {
    fail(Errc::DimensionMismatch, "gaussian KL dimension mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < mu_p.size(); ++i) {
    const double r = sigma_p[i] / sigma_q[i];
    const double d = (mu_p[i] - mu_q[i]) / sigma_q[i];
    kl += std::log(sigma_q[i] / sigma_p[i]) + 0.5 * (r * r + d * d) - 0.5;
  }
  return kl;
}

}  // namespace finbench::rl
