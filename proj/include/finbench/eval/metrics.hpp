#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace finbench::eval {

struct EquityCurve {
  std::vector<std::int64_t> timestamps;
  std::vector<double> values;  // v_t > 0

  std::vector<double> period_returns() const;
  void validate() const;
  void write_csv(const std::string& path) const;
  static EquityCurve read_csv(const std::string& path);
};

struct MetricsConfig {
  double periods_per_year = 252.0;
  double risk_free = 0.0;       // per-period rate
  double omega_threshold = 0.0;
  double rachev_alpha = 0.05;   // upper tail
  double rachev_beta = 0.05;    // lower tail
};

// Undefined metrics (zero denominators) stay unset and serialize as null/NA,
// never as silent zeros.
struct MetricsReport {
  std::optional<double> cumulative_return;
  std::optional<double> annualized_return;
  std::optional<double> annualized_volatility;
  std::optional<double> sharpe;
  std::optional<double> sortino;
  std::optional<double> calmar;
  std::optional<double> omega;
  std::optional<double> rachev;
  std::optional<double> max_drawdown;
  std::optional<double> romad;
  std::optional<double> win_loss;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
  static std::vector<std::string> field_names();
  std::vector<std::optional<double>> fields() const;
};

MetricsReport compute_metrics(const EquityCurve& curve, const MetricsConfig& cfg);

// Single-pass peak-tracking drawdown, in [-1, 0].
double max_drawdown_streaming(std::span<const double> values);

}  // namespace finbench::eval
