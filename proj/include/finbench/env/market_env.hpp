#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "finbench/data/panel.hpp"

namespace finbench::env {

using ActionVector = std::vector<double>;

// Flattened layout [balance, prices, holdings, features]: K(I+2)+1 entries.
struct MarketState {
  double balance = 0.0;
  std::vector<double> prices;
  std::vector<double> holdings;
  std::vector<double> features;  // K * I, asset-major
  int t = 0;

  static int flat_dim(int assets, int features_per_asset) {
    return assets * (features_per_asset + 2) + 1;
  }

  int flat_dim() const;
  std::vector<double> flatten() const;
  void flatten_into(std::span<double> out) const;
};

double total_asset_value(const MarketState& s);

enum class ActionMode { Continuous, Discrete };

struct EnvConfig {
  double initial_balance = 1'000'000.0;
  double cost_rate = 0.001;  // per executed buy/sell
  std::optional<double> turbulence_threshold;
  double gamma = 0.99;
  ActionMode action_mode = ActionMode::Continuous;
  // Per-step clip on |shares| per asset; also the continuous action scale.
  double max_shares_per_trade = 100.0;
  // Discrete share levels (already in share units).
  std::vector<double> action_levels = {-100.0, 0.0, 100.0};
  std::optional<double> reward_scale;
  // Starting holdings (empty = all cash); used when positions carry across
  // evaluation windows.
  std::vector<double> initial_holdings;
  // Text-signal integration: adjust actions by the "sentiment" feature and
  // rewards by the "risk" feature when those columns are present.
  bool use_sentiment = false;
  bool use_risk_penalty = false;

  void validate() const;
};

struct Transition {
  MarketState next;
  double reward = 0.0;            // raw currency delta before optional scaling
  std::vector<double> executed;   // signed shares actually traded per asset
  double cost = 0.0;              // total transaction cost paid
};

// Pure MDP transition: sells first (clipped to holdings), then buys in
// ascending asset index (clipped to remaining cash including costs), then
// prices advance and the reward v_{t+1} - v_t is computed. When
// `force_liquidate` is set the action is overridden by a full sell-off.
Transition apply_action(const MarketState& s, const ActionVector& action,
                        std::span<const double> next_prices,
                        std::span<const double> next_features, const EnvConfig& cfg,
                        bool force_liquidate = false);

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

// Gym-style single environment over an immutable feature panel.
class TradingEnv {
 public:
  TradingEnv(std::shared_ptr<const data::FeaturePanel> data, EnvConfig cfg);

  MarketState reset();
  StepResult step(const ActionVector& action);

  const MarketState& state() const { return state_; }
  bool done() const { return done_; }
  bool active() const { return active_; }
  double total_asset_value() const { return env::total_asset_value(state_); }

  int num_assets() const { return data_->num_assets(); }
  int num_features() const { return data_->num_features(); }
  int state_dim() const { return MarketState::flat_dim(num_assets(), num_features()); }
  // Steps available per episode (T - 1 transitions).
  int horizon() const { return data_->num_periods() - 1; }

  const EnvConfig& config() const { return cfg_; }
  const data::FeaturePanel& data() const { return *data_; }

  std::span<const double> last_executed() const { return last_executed_; }
  double last_cost() const { return last_cost_; }

 private:
  std::span<const double> prices_at(int t) const;
  std::span<const double> features_at(int t) const;

  std::shared_ptr<const data::FeaturePanel> data_;
  EnvConfig cfg_;
  MarketState state_;
  bool done_ = false;
  bool active_ = false;
  int turbulence_col_ = -1;
  int sentiment_col_ = -1;
  int risk_col_ = -1;
  std::vector<double> last_executed_;
  double last_cost_ = 0.0;
};

}  // namespace finbench::env
