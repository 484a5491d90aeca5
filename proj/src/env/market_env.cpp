#include "finbench/env/market_env.hpp"

#include <algorithm>
#include <cmath>

#include "finbench/signals/signals.hpp"
#include "finbench/util/error.hpp"

namespace finbench::env {

int MarketState::flat_dim() const {
  return static_cast<int>(1 + prices.size() + holdings.size() + features.size());
}

std::vector<double> MarketState::flatten() const {
  std::vector<double> out(static_cast<std::size_t>(flat_dim()));
  flatten_into(out);
  return out;
}

void MarketState::flatten_into(std::span<double> out) const {
  if (out.size() != static_cast<std::size_t>(flat_dim())) {
    fail(Errc::DimensionMismatch, "flatten buffer size mismatch");
  }
  std::size_t i = 0;
  out[i++] = balance;
  for (double p : prices) out[i++] = p;
  for (double h : holdings) out[i++] = h;
  for (double f : features) out[i++] = f;
}

double total_asset_value(const MarketState& s) {
  double v = s.balance;
  for (std::size_t i = 0; i < s.prices.size(); ++i) v += s.prices[i] * s.holdings[i];
  return v;
}

void EnvConfig::validate() const {
  if (!(cost_rate >= 0.0 && cost_rate <= 0.05)) {
    fail(Errc::ConfigError, "cost_rate must be in [0, 0.05]");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) fail(Errc::ConfigError, "gamma must be in (0, 1)");
  if (!(initial_balance > 0.0)) fail(Errc::ConfigError, "initial_balance must be positive");
  if (!(max_shares_per_trade > 0.0)) {
    fail(Errc::ConfigError, "max_shares_per_trade must be positive");
  }
  if (action_mode == ActionMode::Discrete && action_levels.empty()) {
    fail(Errc::ConfigError, "discrete mode needs a non-empty level set");
  }
  for (double h : initial_holdings) {
    if (!(h >= 0.0)) fail(Errc::ConfigError, "initial holdings must be nonnegative");
  }
}

Transition apply_action(const MarketState& s, const ActionVector& action,
                        std::span<const double> next_prices,
                        std::span<const double> next_features, const EnvConfig& cfg,
                        bool force_liquidate) {
  const std::size_t k = s.prices.size();
  if (action.size() != k || next_prices.size() != k) {
    fail(Errc::DimensionMismatch, "action/price dimension mismatch");
  }
  for (double a : action) {
    if (!std::isfinite(a)) fail(Errc::InvalidArgument, "non-finite action");
  }

  const double v_before = total_asset_value(s);

  std::vector<double> trade(k);
  if (force_liquidate) {
    for (std::size_t i = 0; i < k; ++i) trade[i] = -s.holdings[i];
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      trade[i] = std::clamp(action[i], -cfg.max_shares_per_trade, cfg.max_shares_per_trade);
    }
  }

  Transition out;
  out.executed.assign(k, 0.0);
  double balance = s.balance;
  std::vector<double> holdings = s.holdings;

  // Sells first: proceeds fund subsequent buys within the same step.
  for (std::size_t i = 0; i < k; ++i) {
    if (trade[i] < 0.0) {
      const double qty = std::min(-trade[i], holdings[i]);
      if (qty <= 0.0) continue;
      const double cost = cfg.cost_rate * s.prices[i] * qty;
      balance += s.prices[i] * qty - cost;
      holdings[i] -= qty;
      out.executed[i] = -qty;
      out.cost += cost;
    }
  }
  // Buys in ascending asset index, each capped by remaining cash incl. cost.
  for (std::size_t i = 0; i < k; ++i) {
    if (trade[i] > 0.0) {
      const double unit = s.prices[i] * (1.0 + cfg.cost_rate);
      const double affordable = unit > 0.0 ? balance / unit : 0.0;
      const double qty = std::min(trade[i], affordable);
      if (qty <= 0.0) continue;
      const double cost = cfg.cost_rate * s.prices[i] * qty;
      balance -= s.prices[i] * qty + cost;
      holdings[i] += qty;
      out.executed[i] = qty;
      out.cost += cost;
    }
  }
  if (balance < 0.0) balance = 0.0;  // guard FP residue from exact-affordability buys

  out.next.balance = balance;
  out.next.prices.assign(next_prices.begin(), next_prices.end());
  out.next.holdings = std::move(holdings);
  out.next.features.assign(next_features.begin(), next_features.end());
  out.next.t = s.t + 1;
  out.reward = total_asset_value(out.next) - v_before;
  return out;
}

TradingEnv::TradingEnv(std::shared_ptr<const data::FeaturePanel> data, EnvConfig cfg)
    : data_(std::move(data)), cfg_(std::move(cfg)) {
  if (!data_) fail(Errc::InvalidArgument, "environment is unbound");
  cfg_.validate();
  if (data_->num_periods() < 2) {
    fail(Errc::InsufficientData, "environment needs at least 2 timestamps");
  }
  turbulence_col_ = data_->feature_index("turbulence");
  sentiment_col_ = data_->feature_index("sentiment");
  risk_col_ = data_->feature_index("risk");
  if (cfg_.use_sentiment && sentiment_col_ < 0) {
    fail(Errc::ConfigError, "use_sentiment requires a 'sentiment' feature column");
  }
  if (cfg_.use_risk_penalty && risk_col_ < 0) {
    fail(Errc::ConfigError, "use_risk_penalty requires a 'risk' feature column");
  }
  last_executed_.assign(data_->num_assets(), 0.0);
}

std::span<const double> TradingEnv::prices_at(int t) const {
  return {data_->base.close.data() + data_->base.cell(t, 0),
          static_cast<std::size_t>(data_->num_assets())};
}

std::span<const double> TradingEnv::features_at(int t) const {
  const std::size_t row =
      static_cast<std::size_t>(data_->num_assets()) * data_->num_features();
  return {data_->features.data() + static_cast<std::size_t>(t) * row, row};
}

MarketState TradingEnv::reset() {
  state_.balance = cfg_.initial_balance;
  state_.prices.assign(prices_at(0).begin(), prices_at(0).end());
  if (cfg_.initial_holdings.empty()) {
    state_.holdings.assign(data_->num_assets(), 0.0);
  } else {
    if (cfg_.initial_holdings.size() != static_cast<std::size_t>(data_->num_assets())) {
      fail(Errc::ConfigError, "initial holdings dimension mismatch");
    }
    state_.holdings = cfg_.initial_holdings;
  }
  state_.features.assign(features_at(0).begin(), features_at(0).end());
  state_.t = 0;
  done_ = false;
  active_ = true;
  std::fill(last_executed_.begin(), last_executed_.end(), 0.0);
  last_cost_ = 0.0;
  return state_;
}

StepResult TradingEnv::step(const ActionVector& action) {
  if (!active_) fail(Errc::ProtocolViolation, "step before reset");
  if (done_) fail(Errc::ProtocolViolation, "step after episode end");
  const int k = num_assets();
  if (static_cast<int>(action.size()) != k) {
    fail(Errc::DimensionMismatch, "action dimension mismatch");
  }

  bool force_liquidate = false;
  if (cfg_.turbulence_threshold && turbulence_col_ >= 0) {
    const double turbulence = data_->feature_at(state_.t, 0, turbulence_col_);
    force_liquidate = turbulence > *cfg_.turbulence_threshold;
  }

  ActionVector adjusted = action;
  if (cfg_.use_sentiment && !force_liquidate) {
    for (int i = 0; i < k; ++i) {
      const double u = data_->feature_at(state_.t, i, sentiment_col_);
      adjusted[i] = signals::sentiment_adjust(u, adjusted[i]);
    }
  }

  Transition tr = apply_action(state_, adjusted, prices_at(state_.t + 1),
                               features_at(state_.t + 1), cfg_, force_liquidate);

  double reward = tr.reward;
  if (cfg_.use_risk_penalty) {
    // Cash behaves as a neutral asset: M = (sum_i p_i h_i m_i + b) / v.
    const double v = env::total_asset_value(tr.next);
    if (v > 0.0) {
      double m = tr.next.balance;
      for (int i = 0; i < k; ++i) {
        const double q = data_->feature_at(state_.t, i, risk_col_);
        m += tr.next.prices[i] * tr.next.holdings[i] * (1.0 + 0.05 * (q - 3.0));
      }
      reward = signals::apply_risk_penalty(reward, m / v);
    }
  }
  if (cfg_.reward_scale) reward *= *cfg_.reward_scale;

  last_executed_ = tr.executed;
  last_cost_ = tr.cost;
  state_ = std::move(tr.next);
  done_ = state_.t >= data_->num_periods() - 1;
  return {reward, done_};
}

}  // namespace finbench::env
