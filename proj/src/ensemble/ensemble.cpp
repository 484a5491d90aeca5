#include "finbench/ensemble/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>

#include "finbench/data/features.hpp"
#include "finbench/util/csv.hpp"
#include "finbench/util/error.hpp"
#include "finbench/util/stats.hpp"

namespace finbench::ensemble {

void EnsembleConfig::validate() const {
  if (members.empty()) fail(Errc::ConfigError, "ensemble needs at least one member");
  if (!(lambda_kl >= 0.0)) fail(Errc::ConfigError, "lambda_kl must be >= 0");
  if (window.train < 1 || window.valid < 1 || window.trade < 1) {
    fail(Errc::ConfigError, "window lengths must be >= 1");
  }
  for (const auto& m : members) m.validate();
}

double sharpe_ratio(std::span<const double> period_returns, double risk_free) {
  if (period_returns.size() < 2) {
    fail(Errc::InsufficientData, "sharpe ratio needs >= 2 returns");
  }
  const double sd = stddev(period_returns, 1);
  if (sd == 0.0) fail(Errc::UndefinedMetric, "sharpe ratio undefined for zero variance");
  return (mean(period_returns) - risk_free) / sd;
}

std::vector<double> sharpe_weights(std::span<const double> sharpes, double discard_threshold) {
  if (sharpes.empty()) fail(Errc::InvalidArgument, "sharpe_weights needs >= 1 agent");
  const std::size_t n = sharpes.size();
  std::vector<double> weights(n, 0.0);
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(sharpes[i]) && sharpes[i] >= discard_threshold) survivors.push_back(i);
  }
  if (survivors.empty()) {
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
    return weights;
  }
  double max_s = sharpes[survivors.front()];
  for (std::size_t i : survivors) max_s = std::max(max_s, sharpes[i]);
  double denom = 0.0;
  for (std::size_t i : survivors) denom += std::exp(sharpes[i] - max_s);
  for (std::size_t i : survivors) weights[i] = std::exp(sharpes[i] - max_s) / denom;
  return weights;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) {
    fail(Errc::DimensionMismatch, "categorical KL dimension mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) fail(Errc::InvalidArgument, "KL undefined: q has zero mass where p > 0");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double kl_diversity_loss(double base_loss, std::span<const double> pi_a,
                         std::span<const std::vector<double>> peer_pis, double lambda) {
  if (!(lambda >= 0.0)) fail(Errc::InvalidArgument, "lambda must be >= 0");
  double term = 0.0;
  for (const auto& pi_b : peer_pis) term += kl_divergence(pi_b, pi_a);
  return base_loss + lambda * term;
}

double kl_diversity_loss(double base_loss, const rl::GaussianPolicy& policy_a,
                         std::span<const rl::GaussianPolicy* const> peers,
                         const std::vector<std::vector<double>>& states, double lambda) {
  if (!(lambda >= 0.0)) fail(Errc::InvalidArgument, "lambda must be >= 0");
  if (states.empty()) fail(Errc::InvalidArgument, "empty state batch");
  const int da = policy_a.action_dim();
  std::vector<double> mu_a(da), mu_b(da), sigma_a(da), sigma_b(da);
  for (int k = 0; k < da; ++k) sigma_a[k] = policy_a.stddev(k);

  double term = 0.0;
  for (const auto& state : states) {
    policy_a.mean(state, mu_a);
    for (const rl::GaussianPolicy* peer : peers) {
      peer->mean(state, mu_b);
      for (int k = 0; k < da; ++k) sigma_b[k] = peer->stddev(k);
      term += rl::kl_divergence_gaussian(mu_b, sigma_b, mu_a, sigma_a);
    }
  }
  return base_loss + lambda * term / static_cast<double>(states.size());
}

env::ActionVector combine_weighted(std::span<const rl::TrainedAgent* const> members,
                                   std::span<const double> weights,
                                   std::span<const double> state) {
  if (members.empty() || members.size() != weights.size()) {
    fail(Errc::DimensionMismatch, "member/weight count mismatch");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) fail(Errc::InvalidArgument, "weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(Errc::InvalidArgument, "weights must sum to 1");

  env::ActionVector combined(static_cast<std::size_t>(members.front()->action_dim), 0.0);
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const env::ActionVector a = members[i]->act(state, rl::ActMode::Exploit, nullptr);
    if (a.size() != combined.size()) fail(Errc::DimensionMismatch, "member action dim mismatch");
    for (std::size_t k = 0; k < combined.size(); ++k) combined[k] += weights[i] * a[k];
  }
  return combined;
}

double combine_majority(std::span<const double> member_actions) {
  if (member_actions.empty()) fail(Errc::InvalidArgument, "majority vote over no actions");
  std::map<double, int> counts;
  for (double a : member_actions) ++counts[a];
  int best_count = 0;
  for (const auto& [value, count] : counts) best_count = std::max(best_count, count);
  // Ties: hold first, then the smallest |action|, then the smaller value.
  double chosen = 0.0;
  bool found = false;
  for (const auto& [value, count] : counts) {
    if (count != best_count) continue;
    if (!found) {
      chosen = value;
      found = true;
      continue;
    }
    if (value == 0.0) {
      chosen = 0.0;
    } else if (chosen != 0.0 &&
               (std::abs(value) < std::abs(chosen) ||
                (std::abs(value) == std::abs(chosen) && value < chosen))) {
      chosen = value;
    }
  }
  return chosen;
}

env::ActionVector combine_majority(std::span<const rl::TrainedAgent* const> members,
                                   std::span<const double> state) {
  if (members.empty()) fail(Errc::InvalidArgument, "majority vote over no members");
  const int da = members.front()->action_dim;
  std::vector<env::ActionVector> actions;
  actions.reserve(members.size());
  for (const rl::TrainedAgent* m : members) {
    actions.push_back(m->act(state, rl::ActMode::Exploit, nullptr));
  }
  env::ActionVector combined(static_cast<std::size_t>(da), 0.0);
  std::vector<double> column(members.size());
  for (int k = 0; k < da; ++k) {
    for (std::size_t i = 0; i < members.size(); ++i) column[i] = actions[i][k];
    combined[k] = combine_majority(column);
  }
  return combined;
}

void write_trade_log(const std::vector<TradeRecord>& trades, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write trade log: " + path);
  out << "timestamp,asset,action,executed,price,cost,balance,value\n";
  for (const auto& t : trades) {
    out << t.timestamp << ',' << t.asset << ',' << format_double(t.action) << ','
        << format_double(t.executed) << ',' << format_double(t.price) << ','
        << format_double(t.cost) << ',' << format_double(t.balance) << ','
        << format_double(t.value) << '\n';
  }
}

namespace {

rl::TrainedAgent train_member(const rl::AgentSpec& base_spec, const EnsembleConfig& cfg,
                              const data::FeaturePanel& train_data, std::uint64_t member_seed,
                              const env::EnvConfig& env_cfg,
                              const std::vector<rl::PeerPolicy>& peers) {
  rl::AgentSpec spec = base_spec;
  spec.seed = member_seed;

  auto member_data = std::make_shared<data::FeaturePanel>(train_data);
  if (cfg.perturb_pct > 0.0) {
    member_data->base = data::perturb_prices(train_data.base, cfg.perturb_pct, member_seed);
  }

  env::EnvConfig train_env = env_cfg;
  train_env.initial_holdings.clear();

  if (rl::is_value_based(spec.algorithm)) {
    env::EnvConfig dcfg = train_env;
    dcfg.action_mode = env::ActionMode::Discrete;
    rl::DiscreteTradingEnv den(env::TradingEnv(member_data, dcfg));
    return rl::train_off_policy(spec, den, cfg.off_policy_steps);
  }

  env::VecEnv venv = env::make_vec_env(member_data, train_env, cfg.n_envs);
  if (spec.algorithm == rl::Algorithm::Ppo) {
    rl::DiversityPenalty penalty;
    penalty.lambda = cfg.lambda_kl;
    penalty.peers = peers;
    const bool use_diversity = cfg.lambda_kl > 0.0 && !peers.empty();
    return rl::train_on_policy(spec, venv, cfg.train_iterations,
                               use_diversity ? &penalty : nullptr);
  }
  return rl::train_off_policy(spec, venv, cfg.off_policy_steps);
}

// Exploit rollout over a window; returns per-period portfolio values.
std::vector<double> evaluate_member(const rl::TrainedAgent& agent,
                                    const data::FeaturePanel& window,
                                    const env::EnvConfig& env_cfg) {
  auto data = std::make_shared<data::FeaturePanel>(window);
  env::TradingEnv env(data, env_cfg);
  std::vector<double> values;
  env.reset();
  values.push_back(env.total_asset_value());
  while (!env.done()) {
    const auto state = env.state().flatten();
    env.step(agent.act(state, rl::ActMode::Exploit, nullptr));
    values.push_back(env.total_asset_value());
  }
  return values;
}

}  // namespace

RollingResult run_rolling_ensemble(const EnsembleConfig& cfg, const data::FeaturePanel& data,
                                   const env::EnvConfig& env_cfg, std::uint64_t seed) {
  cfg.validate();
  env_cfg.validate();
  const int t_count = data.num_periods();
  const int span = cfg.window.train + cfg.window.valid + cfg.window.trade;
  if (t_count < span) {
    fail(Errc::InsufficientData,
         "need at least " + std::to_string(span) + " periods, have " + std::to_string(t_count));
  }

  RollingResult result;
  double capital = env_cfg.initial_balance;
  std::vector<double> carried_holdings;

  const std::size_t m_count = cfg.members.size();
  int window_index = 0;
  for (int start = 0; start + span <= t_count; start += cfg.window.trade, ++window_index) {
    const data::FeaturePanel train_slice = data.slice(start, start + cfg.window.train);
    const data::FeaturePanel valid_slice =
        data.slice(start + cfg.window.train, start + cfg.window.train + cfg.window.valid);
    // Trade slice starts one period early so the first traded decision uses
    // the last validation-period close as its entry state.
    const data::FeaturePanel trade_slice =
        data.slice(start + cfg.window.train + cfg.window.valid - 1, start + span);

    // Train members independently; earlier members of the window serve as
    // diversity peers for later ones.
    std::vector<rl::TrainedAgent> members;
    std::vector<rl::PeerPolicy> peers;
    for (std::size_t i = 0; i < m_count; ++i) {
      const std::uint64_t member_seed = Rng::derive_seed(
          seed, "ensemble-member", static_cast<std::uint64_t>(window_index) * m_count + i);
      members.push_back(
          train_member(cfg.members[i], cfg, train_slice, member_seed, env_cfg, peers));
      if (members.back().policy) {
        rl::PeerPolicy peer;
        peer.policy = members.back().policy.get();
        if (cfg.members[i].algorithm == rl::Algorithm::Ddpg) peer.sigma_override = 0.1;
        peers.push_back(peer);
      }
    }

    WindowDiagnostics diag;
    diag.index = window_index;
    std::vector<double> weights;
    if (cfg.scheme == Scheme::WeightedAverage) {
      std::vector<double> sharpes(m_count);
      for (std::size_t i = 0; i < m_count; ++i) {
        const std::vector<double> values = evaluate_member(members[i], valid_slice, env_cfg);
        std::vector<double> returns;
        for (std::size_t t = 1; t < values.size(); ++t) {
          returns.push_back(values[t] / values[t - 1] - 1.0);
        }
        try {
          sharpes[i] = sharpe_ratio(returns, cfg.risk_free);
        } catch (const Error&) {
          sharpes[i] = std::nan("");  // zero-variance validation: discard
        }
      }
      weights = sharpe_weights(sharpes, cfg.sharpe_discard_threshold);
      diag.sharpes = sharpes;
      diag.weights = weights;
    }
    result.windows.push_back(diag);

    // Trade with the combined policy, continuing from current capital.
    env::EnvConfig trade_cfg = env_cfg;
    trade_cfg.initial_balance = capital;
    trade_cfg.initial_holdings = carried_holdings;
    auto trade_data = std::make_shared<data::FeaturePanel>(trade_slice);
    env::TradingEnv env(trade_data, trade_cfg);
    env.reset();

    std::vector<const rl::TrainedAgent*> member_ptrs;
    for (const auto& m : members) member_ptrs.push_back(&m);

    while (!env.done()) {
      const int t = env.state().t;
      const auto state = env.state().flatten();
      const std::vector<double> prices = env.state().prices;
      env::ActionVector action;
      if (cfg.scheme == Scheme::WeightedAverage) {
        action = combine_weighted(member_ptrs, weights, state);
      } else {
        action = combine_majority(member_ptrs, state);
      }
      env.step(action);
      const auto executed = env.last_executed();
      for (int k = 0; k < env.num_assets(); ++k) {
        if (action[k] == 0.0 && executed[k] == 0.0) continue;
        result.trades.push_back({trade_slice.base.timestamps[t], trade_slice.base.assets[k],
                                 action[k], executed[k], prices[k],
                                 env.config().cost_rate * prices[k] * std::abs(executed[k]),
                                 env.state().balance, env.total_asset_value()});
      }
      result.timestamps.push_back(trade_slice.base.timestamps[env.state().t]);
      result.values.push_back(env.total_asset_value());
    }

    if (cfg.carry_positions) {
      // Next window's trade slice starts at this boundary bar, so carried
      // holdings revalue at the same prices.
      capital = env.state().balance;
      carried_holdings = env.state().holdings;
    } else {
      // Liquidate at window close, paying exit costs; the final equity point
      // reflects the net value handed to the next window.
      double value = env.state().balance;
      for (int k = 0; k < env.num_assets(); ++k) {
        value += env.state().prices[k] * env.state().holdings[k] * (1.0 - env_cfg.cost_rate);
      }
      capital = value;
      carried_holdings.clear();
      if (!result.values.empty()) result.values.back() = value;
    }
  }
  return result;
}

}  // namespace finbench::ensemble
