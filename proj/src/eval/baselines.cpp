#include "finbench/eval/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "finbench/util/error.hpp"

namespace finbench::eval {

std::vector<double> project_capped_simplex(std::span<const double> v, double cap) {
  const int k = static_cast<int>(v.size());
  if (!(cap > 0.0) || cap * k < 1.0 - 1e-12) {
    fail(Errc::InvalidArgument, "infeasible cap: K * cap must be >= 1");
  }
  // w_i(tau) = clamp(v_i - tau, 0, cap); sum is decreasing in tau -> bisect.
  double lo = *std::min_element(v.begin(), v.end()) - 1.0;
  double hi = *std::max_element(v.begin(), v.end());
  const auto mass = [&](double tau) {
    double s = 0.0;
    for (double x : v) s += std::clamp(x - tau, 0.0, cap);
    return s;
  };
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) >= 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  std::vector<double> w(k);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    w[i] = std::clamp(v[i] - lo, 0.0, cap);
    sum += w[i];
  }
  // Distribute the bisection residue over entries strictly inside the box.
  const double residue = 1.0 - sum;
  if (residue != 0.0) {
    int interior = 0;
    for (double x : w) {
      if (x > 0.0 && x < cap) ++interior;
    }
    if (interior > 0) {
      const double bump = residue / interior;
      for (double& x : w) {
        if (x > 0.0 && x < cap) x = std::clamp(x + bump, 0.0, cap);
      }
    }
  }
  return w;
}

std::vector<double> panel_returns(const data::PanelData& panel) {
  const int t_count = panel.num_periods();
  const int k = panel.num_assets();
  std::vector<double> r(static_cast<std::size_t>(std::max(0, t_count - 1)) * k);
  for (int t = 1; t < t_count; ++t) {
    for (int a = 0; a < k; ++a) {
      r[static_cast<std::size_t>(t - 1) * k + a] =
          panel.close[panel.cell(t, a)] / panel.close[panel.cell(t - 1, a)] - 1.0;
    }
  }
  return r;
}

std::vector<double> mean_variance_weights(std::span<const double> returns, int periods,
                                          int assets, double cap,
                                          const MeanVarianceOptions& options) {
  if (periods < 2) fail(Errc::InsufficientData, "mean-variance needs >= 2 return rows");
  if (returns.size() != static_cast<std::size_t>(periods) * assets) {
    fail(Errc::DimensionMismatch, "return matrix shape mismatch");
  }
  if (!(cap > 0.0) || cap * assets < 1.0 - 1e-12) {
    fail(Errc::InvalidArgument, "infeasible cap: K * cap must be >= 1");
  }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> r(
      returns.data(), periods, assets);
  const Eigen::VectorXd mu = r.colwise().mean();
  const Eigen::MatrixXd centered = r.rowwise() - mu.transpose();
  Eigen::MatrixXd sigma = centered.transpose() * centered / (periods - 1);
  sigma.diagonal().array() += options.ridge;

  // Risk aversion from the tangency direction: the unconstrained optimum
  // Sigma^-1 mu / rho has unit mass when rho = 1' Sigma^-1 mu.
  const Eigen::VectorXd tangency = sigma.ldlt().solve(mu);
  double rho = tangency.sum();
  if (!(rho > 1e-8) || !std::isfinite(rho)) rho = 1.0;

  // Projected gradient ascent with a Lipschitz-scaled step.
  const double lipschitz = rho * sigma.operatorNorm();
  const double step = options.step_scale / std::max(lipschitz, 1e-12);

  std::vector<double> w0(assets, 1.0 / assets);
  std::vector<double> w = project_capped_simplex(w0, cap);
  std::vector<double> candidate(assets);
  for (int it = 0; it < options.iterations; ++it) {
    Eigen::Map<const Eigen::VectorXd> wv(w.data(), assets);
    const Eigen::VectorXd grad = mu - rho * (sigma * wv);
    for (int i = 0; i < assets; ++i) candidate[i] = w[i] + step * grad(i);
    w = project_capped_simplex(candidate, cap);
  }
  return w;
}

EquityCurve weighted_buy_and_hold(const data::PanelData& panel, std::span<const double> weights,
                                  double initial_balance, double cost_rate) {
  panel.validate();
  const int t_count = panel.num_periods();
  const int k = panel.num_assets();
  if (weights.size() != static_cast<std::size_t>(k)) {
    fail(Errc::DimensionMismatch, "weight count does not match assets");
  }
  // Entry at t=0 closes; per-asset budget w_i * B buys w_i B / (p (1+c)).
  std::vector<double> shares(k);
  for (int a = 0; a < k; ++a) {
    const double price = panel.close[panel.cell(0, a)];
    shares[a] = weights[a] * initial_balance / (price * (1.0 + cost_rate));
  }
  EquityCurve curve;
  for (int t = 0; t < t_count; ++t) {
    double value = 0.0;
    for (int a = 0; a < k; ++a) value += shares[a] * panel.close[panel.cell(t, a)];
    curve.timestamps.push_back(panel.timestamps[t]);
    curve.values.push_back(value);
  }
  return curve;
}

EquityCurve buy_and_hold(const data::PanelData& panel, double initial_balance,
                         double cost_rate) {
  const std::vector<double> weights(panel.num_assets(),
                                    1.0 / std::max(1, panel.num_assets()));
  return weighted_buy_and_hold(panel, weights, initial_balance, cost_rate);
}

EquityCurve buy_and_hold_index(std::span<const std::int64_t> timestamps,
                               std::span<const double> values, double initial_balance,
                               double cost_rate) {
  if (timestamps.size() != values.size() || values.empty()) {
    fail(Errc::DimensionMismatch, "index series shape mismatch");
  }
  const double units = initial_balance / (values.front() * (1.0 + cost_rate));
  EquityCurve curve;
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (!(values[t] > 0.0)) fail(Errc::InvalidArgument, "index values must be positive");
    curve.timestamps.push_back(timestamps[t]);
    curve.values.push_back(units * values[t]);
  }
  return curve;
}

}  // namespace finbench::eval
