#pragma once

#include <cstdint>

#include "finbench/data/panel.hpp"
#include "finbench/env/market_env.hpp"
#include "finbench/eval/metrics.hpp"
#include "finbench/eval/windows.hpp"

namespace finbench::eval {

enum class ProtocolMode { Backtest, Rolling };

// Strategy under evaluation. `update_count` must increase with every
// parameter update so the protocols can assert evaluation purity.
class ProtocolAgent {
 public:
  virtual ~ProtocolAgent() = default;
  virtual void train(const data::FeaturePanel& window, std::uint64_t seed) = 0;
  // Hyperparameter-tuning hook on the validation slice (optional).
  virtual void tune(const data::FeaturePanel& validation) { (void)validation; }
  virtual env::ActionVector act(const env::MarketState& state) const = 0;
  virtual std::uint64_t update_count() const = 0;
};

struct ProtocolResult {
  EquityCurve curve;
  MetricsReport metrics;
  int cycles = 0;  // rolling: retrain+trade cycles executed
};

struct RollingConfig {
  int train = 6;  // X
  int valid = 2;  // Y
  int trade = 1;  // periods traded per window (1 reproduces the daily loop)
  int roll = 1;
};

// Train once on the released split, then evaluate frozen on the withheld
// split. Any parameter update during evaluation is a protocol violation.
ProtocolResult run_backtest(ProtocolAgent& agent, const data::DataSplit& split,
                            const env::EnvConfig& env_cfg, const MetricsConfig& metrics_cfg,
                            std::uint64_t seed);

// Walk-forward loop over the full panel: per window train on X, tune on Y,
// retrain on X+Y, trade, roll forward. Capital chains across windows.
ProtocolResult run_rolling(ProtocolAgent& agent, const data::FeaturePanel& panel,
                           const RollingConfig& cfg, const env::EnvConfig& env_cfg,
                           const MetricsConfig& metrics_cfg, std::uint64_t seed);

ProtocolResult run_protocol(ProtocolMode mode, ProtocolAgent& agent,
                            const data::DataSplit& split, const RollingConfig& rolling_cfg,
                            const env::EnvConfig& env_cfg, const MetricsConfig& metrics_cfg,
                            std::uint64_t seed);

}  // namespace finbench::eval
