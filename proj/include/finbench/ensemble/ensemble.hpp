#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "finbench/data/panel.hpp"
#include "finbench/env/market_env.hpp"
#include "finbench/rl/agents.hpp"

namespace finbench::ensemble {

enum class Scheme { WeightedAverage, MajorityVote };

struct WindowLengths {
  int train = 30;
  int valid = 5;
  int trade = 5;
};

struct EnsembleConfig {
  std::vector<rl::AgentSpec> members;
  Scheme scheme = Scheme::WeightedAverage;
  double lambda_kl = 0.0;
  double sharpe_discard_threshold = 0.0;
  WindowLengths window;
  double risk_free = 0.0;

  // Per-window member training budget.
  int train_iterations = 10;      // ppo iterations
  int off_policy_steps = 400;     // ddpg/sac batch steps
  int n_envs = 4;
  // Price perturbation range for agent diversity (0 disables).
  double perturb_pct = 0.01;
  bool carry_positions = false;

  void validate() const;
};

// (mean - r_f) / sample-std (ddof = 1); errors on zero variance.
double sharpe_ratio(std::span<const double> period_returns, double risk_free);

// Members below the threshold get weight 0; softmax over survivors. All
// discarded falls back to equal weights.
std::vector<double> sharpe_weights(std::span<const double> sharpes, double discard_threshold);

// KL(P || Q) between categorical distributions.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Diversity-regularized objective for one categorical decision point:
// base + lambda * sum_B KL(pi_B || pi_A).
double kl_diversity_loss(double base_loss, std::span<const double> pi_a,
                         std::span<const std::vector<double>> peer_pis, double lambda);

// Gaussian-policy variant averaged over a state batch. Deterministic members
// are wrapped upstream with a fixed-sigma surrogate.
double kl_diversity_loss(double base_loss, const rl::GaussianPolicy& policy_a,
                         std::span<const rl::GaussianPolicy* const> peers,
                         const std::vector<std::vector<double>>& states, double lambda);

// Weighted average of the members' exploit actions (share units).
env::ActionVector combine_weighted(std::span<const rl::TrainedAgent* const> members,
                                   std::span<const double> weights,
                                   std::span<const double> state);

// Modal action; ties break toward hold (0), then toward smaller |action|.
double combine_majority(std::span<const double> member_actions);
env::ActionVector combine_majority(std::span<const rl::TrainedAgent* const> members,
                                   std::span<const double> state);

struct TradeRecord {
  std::int64_t timestamp;
  std::string asset;
  double action;
  double executed;
  double price;
  double cost;
  double balance;
  double value;
};

struct WindowDiagnostics {
  int index = 0;
  std::vector<double> sharpes;  // NaN marks a validation run with zero variance
  std::vector<double> weights;
};

struct RollingResult {
  std::vector<std::int64_t> timestamps;
  std::vector<double> values;  // equity after each traded period
  std::vector<TradeRecord> trades;
  std::vector<WindowDiagnostics> windows;
};

void write_trade_log(const std::vector<TradeRecord>& trades, const std::string& path);

// Per window: train members independently (seeded data perturbation for
// diversity), validate, convert validation Sharpe ratios into weights, trade
// with the combined policy, then roll forward by the trade length. Positions
// liquidate at window boundaries unless carry_positions is set.
RollingResult run_rolling_ensemble(const EnsembleConfig& cfg, const data::FeaturePanel& data,
                                   const env::EnvConfig& env_cfg, std::uint64_t seed);

}  // namespace finbench::ensemble
