#include "finbench/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "finbench/util/csv.hpp"
#include "finbench/util/error.hpp"
#include "finbench/util/stats.hpp"

namespace finbench::eval {

std::vector<double> EquityCurve::period_returns() const {
  std::vector<double> r;
  r.reserve(values.size() > 1 ? values.size() - 1 : 0);
  for (std::size_t t = 1; t < values.size(); ++t) {
    r.push_back(values[t] / values[t - 1] - 1.0);
  }
  return r;
}

void EquityCurve::validate() const {
  if (timestamps.size() != values.size()) {
    fail(Errc::DimensionMismatch, "equity curve timestamp/value length mismatch");
  }
  for (double v : values) {
    if (!(v > 0.0)) fail(Errc::InvalidArgument, "equity curve values must be positive");
  }
}

void EquityCurve::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write equity curve: " + path);
  out << "timestamp,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << timestamps[i] << ',' << format_double(values[i]) << '\n';
  }
}

EquityCurve EquityCurve::read_csv(const std::string& path) {
  const CsvTable table = finbench::read_csv(path);
  EquityCurve curve;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto ts = parse_timestamp(table.rows[r][0]);
    const auto v = parse_double(table.rows[r][1]);
    if (!ts || !v) fail(Errc::ParseError, "bad equity curve row");
    curve.timestamps.push_back(*ts);
    curve.values.push_back(*v);
  }
  return curve;
}

double max_drawdown_streaming(std::span<const double> values) {
  double peak = values.empty() ? 1.0 : values.front();
  double mdd = 0.0;
  for (double v : values) {
    if (v > peak) peak = v;
    const double dd = v / peak - 1.0;
    if (dd < mdd) mdd = dd;
  }
  return mdd;
}

MetricsReport compute_metrics(const EquityCurve& curve, const MetricsConfig& cfg) {
  curve.validate();
  if (curve.values.size() < 2) {
    fail(Errc::InsufficientData, "metrics need at least 2 equity points");
  }
  const std::vector<double> returns = curve.period_returns();
  const auto n = static_cast<double>(returns.size());
  const double ppy = cfg.periods_per_year;

  MetricsReport m;
  const double growth = curve.values.back() / curve.values.front();
  m.cumulative_return = growth - 1.0;
  m.annualized_return = std::pow(growth, ppy / n) - 1.0;

  const double sd = returns.size() >= 2 ? stddev(returns, 1) : std::nan("");
  if (std::isfinite(sd)) m.annualized_volatility = sd * std::sqrt(ppy);

  const double mean_excess = mean(returns) - cfg.risk_free;
  if (std::isfinite(sd) && sd > 0.0) m.sharpe = mean_excess / sd * std::sqrt(ppy);

  // Downside deviation over returns below the risk-free rate, ddof = 1.
  {
    std::vector<double> downside;
    for (double r : returns) {
      if (r < cfg.risk_free) downside.push_back(r - cfg.risk_free);
    }
    if (downside.size() >= 2) {
      double s = 0.0;
      for (double d : downside) s += d * d;
      const double dd = std::sqrt(s / (static_cast<double>(downside.size()) - 1.0));
      if (dd > 0.0) m.sortino = mean_excess / dd * std::sqrt(ppy);
    }
  }

  m.max_drawdown = max_drawdown_streaming(curve.values);
  const double add = std::abs(*m.max_drawdown);
  if (add > 0.0) {
    m.romad = *m.cumulative_return / add;
    m.calmar = *m.annualized_return / add;
  }

  {
    double gains = 0.0, losses = 0.0;
    for (double r : returns) {
      if (r > cfg.omega_threshold) {
        gains += r - cfg.omega_threshold;
      } else {
        losses += cfg.omega_threshold - r;
      }
    }
    if (losses > 0.0) m.omega = gains / losses;
  }

  {
    std::vector<double> sorted(returns);
    std::sort(sorted.begin(), sorted.end());
    const int upper = std::max(1, static_cast<int>(std::floor(cfg.rachev_alpha * n)));
    const int lower = std::max(1, static_cast<int>(std::floor(cfg.rachev_beta * n)));
    double tail_gain = 0.0, tail_loss = 0.0;
    for (int i = 0; i < upper; ++i) tail_gain += sorted[sorted.size() - 1 - i];
    for (int i = 0; i < lower; ++i) tail_loss += sorted[i];
    tail_gain /= upper;
    tail_loss /= lower;
    if (tail_loss < 0.0) m.rachev = tail_gain / -tail_loss;
  }

  {
    int wins = 0, losses = 0;
    for (double r : returns) {
      if (r > 0.0) ++wins;
      if (r < 0.0) ++losses;
    }
    if (losses > 0) m.win_loss = static_cast<double>(wins) / losses;
  }
  return m;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  return nlohmann::json{{"cumulative_return", opt_json(cumulative_return)},
                        {"annualized_return", opt_json(annualized_return)},
                        {"annualized_volatility", opt_json(annualized_volatility)},
                        {"sharpe", opt_json(sharpe)},
                        {"sortino", opt_json(sortino)},
                        {"calmar", opt_json(calmar)},
                        {"omega", opt_json(omega)},
                        {"rachev", opt_json(rachev)},
                        {"max_drawdown", opt_json(max_drawdown)},
                        {"romad", opt_json(romad)},
                        {"win_loss", opt_json(win_loss)}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.cumulative_return = opt_from(j.at("cumulative_return"));
  m.annualized_return = opt_from(j.at("annualized_return"));
  m.annualized_volatility = opt_from(j.at("annualized_volatility"));
  m.sharpe = opt_from(j.at("sharpe"));
  m.sortino = opt_from(j.at("sortino"));
  m.calmar = opt_from(j.at("calmar"));
  m.omega = opt_from(j.at("omega"));
  m.rachev = opt_from(j.at("rachev"));
  m.max_drawdown = opt_from(j.at("max_drawdown"));
  m.romad = opt_from(j.at("romad"));
  m.win_loss = opt_from(j.at("win_loss"));
  return m;
}

std::vector<std::string> MetricsReport::field_names() {
  return {"cumulative_return", "annualized_return", "annualized_volatility", "sharpe",
          "sortino",           "calmar",            "omega",                 "rachev",
          "max_drawdown",      "romad",             "win_loss"};
}

std::vector<std::optional<double>> MetricsReport::fields() const {
  return {cumulative_return, annualized_return, annualized_volatility, sharpe, sortino,
          calmar,            omega,             rachev,                max_drawdown,
          romad,             win_loss};
}

}  // namespace finbench::eval
