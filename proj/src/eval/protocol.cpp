#include "finbench/eval/protocol.hpp"

#include <memory>
#include <string>

#include "finbench/util/error.hpp"
#include "finbench/util/rng.hpp"

namespace finbench::eval {

namespace {

// Frozen-policy sweep over one window; appends one equity point per period.
// Throws on any parameter update observed during the sweep.
double trade_window(ProtocolAgent& agent, const data::FeaturePanel& window,
                    const env::EnvConfig& cfg, EquityCurve& curve) {
  const std::uint64_t updates_before = agent.update_count();
  auto data = std::make_shared<data::FeaturePanel>(window);
  env::TradingEnv env(data, cfg);
  env.reset();
  while (!env.done()) {
    env.step(agent.act(env.state()));
    curve.timestamps.push_back(window.base.timestamps[env.state().t]);
    curve.values.push_back(env.total_asset_value());
  }
  if (agent.update_count() != updates_before) {
    fail(Errc::ProtocolViolation, "parameter update during frozen evaluation");
  }
  // Liquidation value handed to the next window (exit costs applied).
  double value = env.state().balance;
  for (std::size_t k = 0; k < env.state().holdings.size(); ++k) {
    value += env.state().prices[k] * env.state().holdings[k] * (1.0 - cfg.cost_rate);
  }
  if (!curve.values.empty()) curve.values.back() = value;
  return value;
}

}  // namespace

ProtocolResult run_backtest(ProtocolAgent& agent, const data::DataSplit& split,
                            const env::EnvConfig& env_cfg, const MetricsConfig& metrics_cfg,
                            std::uint64_t seed) {
  if (split.eval.num_periods() < 2) {
    fail(Errc::InsufficientData, "backtest needs >= 2 withheld periods");
  }
  agent.train(split.train, seed);

  ProtocolResult result;
  result.curve.timestamps.push_back(split.eval.base.timestamps.front());
  result.curve.values.push_back(env_cfg.initial_balance);
  trade_window(agent, split.eval, env_cfg, result.curve);
  result.cycles = 1;
  result.metrics = compute_metrics(result.curve, metrics_cfg);
  return result;
}

ProtocolResult run_rolling(ProtocolAgent& agent, const data::FeaturePanel& panel,
                           const RollingConfig& cfg, const env::EnvConfig& env_cfg,
                           const MetricsConfig& metrics_cfg, std::uint64_t seed) {
  const WindowSchedule schedule =
      make_windows(panel.num_periods(), cfg.train, cfg.valid, cfg.trade, cfg.roll);

  ProtocolResult result;
  double capital = env_cfg.initial_balance;
  result.curve.timestamps.push_back(panel.base.timestamps[schedule.windows.front().trade_begin - 1]);
  result.curve.values.push_back(capital);

  int cycle = 0;
  for (const Window& w : schedule.windows) {
    // Step 1: train on X, tune on Y. Step 2: retrain on X+Y together.
    agent.train(panel.slice(w.train_begin, w.train_end),
                Rng::derive_seed(seed, "rolling-train", cycle));
    agent.tune(panel.slice(w.valid_begin, w.valid_end));
    agent.train(panel.slice(w.retrain_begin, w.retrain_end),
                Rng::derive_seed(seed, "rolling-retrain", cycle));

    // Step 3: trade the window with frozen parameters. The slice starts one
    // period early so the first decision sees the pre-trade close.
    env::EnvConfig trade_cfg = env_cfg;
    trade_cfg.initial_balance = capital;
    capital = trade_window(agent, panel.slice(w.trade_begin - 1, w.trade_end), trade_cfg,
                           result.curve);
    ++cycle;
  }
  result.cycles = cycle;
  result.metrics = compute_metrics(result.curve, metrics_cfg);
  return result;
}

ProtocolResult run_protocol(ProtocolMode mode, ProtocolAgent& agent,
                            const data::DataSplit& split, const RollingConfig& rolling_cfg,
                            const env::EnvConfig& env_cfg, const MetricsConfig& metrics_cfg,
                            std::uint64_t seed) {
  if (mode == ProtocolMode::Backtest) {
    return run_backtest(agent, split, env_cfg, metrics_cfg, seed);
  }
  // Rolling: trade days are exactly the withheld periods; training windows
  // reach back into released history.
  const int lookback = rolling_cfg.train + rolling_cfg.valid;
  if (split.train.num_periods() < lookback) {
    fail(Errc::InsufficientData, "released split shorter than train+valid lookback");
  }
  const data::FeaturePanel joined = data::concat_panels(
      split.train.slice(split.train.num_periods() - lookback, split.train.num_periods()),
      split.eval);
  return run_rolling(agent, joined, rolling_cfg, env_cfg, metrics_cfg, seed);
}

}  // namespace finbench::eval
