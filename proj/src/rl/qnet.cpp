#include "finbench/rl/qnet.hpp"

#include "finbench/util/error.hpp"

namespace finbench::rl {

namespace {

std::vector<int> with_bounds(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.push_back(in);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(out);
  return sizes;
}

}  // namespace

MlpQNetwork::MlpQNetwork(int state_dim, const std::vector<int>& hidden, int actions)
    : net_(with_bounds(state_dim, hidden, actions)) {}

void MlpQNetwork::init(std::span<double> params, Rng& rng) const {
  net_.init_params(params, rng);
}

void MlpQNetwork::forward(std::span<const double> params, std::span<const double> state,
                          std::span<double> q) const {
  net_.forward(params, state, q);
}

void MlpQNetwork::backward(std::span<const double> params, std::span<const double> state,
                           std::span<const double> dq, std::span<double> grad) const {
  Mlp::Cache cache;
  std::vector<double> q(net_.output_dim());
  net_.forward_cached(params, state, q, cache);
  net_.backward(params, cache, dq, grad);
}

DuelingQNetwork::DuelingQNetwork(int state_dim, const std::vector<int>& hidden, int actions)
    : trunk_(with_bounds(state_dim, std::vector<int>(hidden.begin(), hidden.end() - 1),
                         hidden.back()),
             Activation::Tanh, Activation::Tanh),
      value_head_({hidden.back(), 1}),
      adv_head_({hidden.back(), actions}),
      actions_(actions) {
  if (hidden.empty()) fail(Errc::InvalidArgument, "dueling network needs a hidden layer");
}

int DuelingQNetwork::param_count() const {
  return trunk_.param_count() + value_head_.param_count() + adv_head_.param_count();
}

void DuelingQNetwork::init(std::span<double> params, Rng& rng) const {
  trunk_.init_params(params.subspan(0, trunk_.param_count()), rng);
  value_head_.init_params(params.subspan(trunk_.param_count(), value_head_.param_count()), rng);
  adv_head_.init_params(
      params.subspan(trunk_.param_count() + value_head_.param_count(), adv_head_.param_count()),
      rng);
}

void dueling_aggregate(double value, std::span<const double> advantage, std::span<double> q) {
  double mean_adv = 0.0;
  for (double a : advantage) mean_adv += a;
  mean_adv /= static_cast<double>(advantage.size());
  for (std::size_t a = 0; a < advantage.size(); ++a) q[a] = value + advantage[a] - mean_adv;
}

void DuelingQNetwork::forward(std::span<const double> params, std::span<const double> state,
                              std::span<double> q) const {
  std::vector<double> h(trunk_.output_dim());
  trunk_.forward(params.subspan(0, trunk_.param_count()), state, h);
  double v = 0.0;
  value_head_.forward(params.subspan(trunk_.param_count(), value_head_.param_count()), h,
                      std::span<double>(&v, 1));
  std::vector<double> adv(actions_);
  adv_head_.forward(
      params.subspan(trunk_.param_count() + value_head_.param_count(), adv_head_.param_count()),
      h, adv);
  dueling_aggregate(v, adv, q);
}

void DuelingQNetwork::backward(std::span<const double> params, std::span<const double> state,
                               std::span<const double> dq, std::span<double> grad) const {
  const auto p_trunk = params.subspan(0, trunk_.param_count());
  const auto p_value = params.subspan(trunk_.param_count(), value_head_.param_count());
  const auto p_adv = params.subspan(trunk_.param_count() + value_head_.param_count(),
                                    adv_head_.param_count());

  Mlp::Cache trunk_cache, value_cache, adv_cache;
  std::vector<double> h(trunk_.output_dim());
  trunk_.forward_cached(p_trunk, state, h, trunk_cache);
  double v = 0.0;
  std::vector<double> adv(actions_);
  value_head_.forward_cached(p_value, h, std::span<double>(&v, 1), value_cache);
  adv_head_.forward_cached(p_adv, h, adv, adv_cache);

  // Q_a = V + A_a - mean(A): dV = sum(dq), dA_b = dq_b - mean(dq).
  double sum_dq = 0.0;
  for (double d : dq) sum_dq += d;
  const double mean_dq = sum_dq / static_cast<double>(actions_);
  std::vector<double> d_adv(actions_);
  for (int a = 0; a < actions_; ++a) d_adv[a] = dq[a] - mean_dq;

  std::vector<double> dh_value(trunk_.output_dim());
  std::vector<double> dh_adv(trunk_.output_dim());
  value_head_.backward(p_value, value_cache, std::span<const double>(&sum_dq, 1),
                       grad.subspan(trunk_.param_count(), value_head_.param_count()), dh_value);
  adv_head_.backward(p_adv, adv_cache, d_adv,
                     grad.subspan(trunk_.param_count() + value_head_.param_count(),
                                  adv_head_.param_count()),
                     dh_adv);
  std::vector<double> dh(trunk_.output_dim());
  for (int i = 0; i < trunk_.output_dim(); ++i) dh[i] = dh_value[i] + dh_adv[i];
  trunk_.backward(p_trunk, trunk_cache, dh, grad.subspan(0, trunk_.param_count()));
}

std::unique_ptr<QNetwork> make_q_network(bool dueling, int state_dim,
                                         const std::vector<int>& hidden, int actions) {
  if (dueling) return std::make_unique<DuelingQNetwork>(state_dim, hidden, actions);
  return std::make_unique<MlpQNetwork>(state_dim, hidden, actions);
}

}  // namespace finbench::rl
