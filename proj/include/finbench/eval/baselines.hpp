#pragma once

#include <span>
#include <vector>

#include "finbench/data/panel.hpp"
#include "finbench/eval/metrics.hpp"

namespace finbench::eval {

struct MeanVarianceOptions {
  double ridge = 1e-8;   // covariance regularization
  int iterations = 2000;
  double step_scale = 1.0;
};

// Maximizes mu' w - (rho/2) w' Sigma w over { sum w = 1, 0 <= w <= cap } by
// projected gradient ascent; rho is calibrated from the tangency direction
// Sigma^-1 mu. Deterministic for fixed options.
std::vector<double> mean_variance_weights(std::span<const double> returns, int periods,
                                          int assets, double cap,
                                          const MeanVarianceOptions& options = {});

// Exact Euclidean projection onto the capped simplex.
std::vector<double> project_capped_simplex(std::span<const double> v, double cap);

// T x K per-period return matrix (row-major) from a panel's closes.
std::vector<double> panel_returns(const data::PanelData& panel);

// All-in at the first close, hold to the end; entry cost applied.
EquityCurve buy_and_hold(const data::PanelData& panel, double initial_balance,
                         double cost_rate);
EquityCurve buy_and_hold_index(std::span<const std::int64_t> timestamps,
                               std::span<const double> values, double initial_balance,
                               double cost_rate);

// Buy-and-hold at fixed weights (the mean-variance baseline curve).
EquityCurve weighted_buy_and_hold(const data::PanelData& panel, std::span<const double> weights,
                                  double initial_balance, double cost_rate);

}  // namespace finbench::eval
