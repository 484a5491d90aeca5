#include "finbench/data/indicators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "finbench/util/error.hpp"

namespace finbench::data {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> ema(const std::vector<double>& x, int n) {
  std::vector<double> out(x.size());
  const double alpha = 2.0 / (n + 1.0);
  double value = x.empty() ? 0.0 : x[0];
  for (std::size_t t = 0; t < x.size(); ++t) {
    value = (t == 0) ? x[0] : alpha * x[t] + (1.0 - alpha) * value;
    out[t] = value;
  }
  return out;
}

std::vector<double> sma(const std::vector<double>& x, int n) {
  std::vector<double> out(x.size(), kNaN);
  double sum = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    sum += x[t];
    if (t >= static_cast<std::size_t>(n)) sum -= x[t - n];
    if (t + 1 >= static_cast<std::size_t>(n)) out[t] = sum / n;
  }
  return out;
}

// Rolling population standard deviation, recomputed per window for numerical
// cleanliness (windows are short).
std::vector<double> rolling_std(const std::vector<double>& x, int n) {
  std::vector<double> out(x.size(), kNaN);
  for (std::size_t t = n - 1; t < x.size(); ++t) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += x[t - i];
    m /= n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += (x[t - i] - m) * (x[t - i] - m);
    out[t] = std::sqrt(s / n);
  }
  return out;
}

// Wilder RSI; a flat window (no gains, no losses) is defined as 50.
std::vector<double> wilder_rsi(const std::vector<double>& close, int n) {
  std::vector<double> out(close.size(), kNaN);
  if (close.size() <= static_cast<std::size_t>(n)) return out;
  double avg_gain = 0.0, avg_loss = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double d = close[i] - close[i - 1];
    avg_gain += std::max(d, 0.0);
    avg_loss += std::max(-d, 0.0);
  }
  avg_gain /= n;
  avg_loss /= n;
  const auto rsi_value = [](double gain, double loss) {
    if (gain == 0.0 && loss == 0.0) return 50.0;
    if (loss == 0.0) return 100.0;
    return 100.0 - 100.0 / (1.0 + gain / loss);
  };
  out[n] = rsi_value(avg_gain, avg_loss);
  for (std::size_t t = n + 1; t < close.size(); ++t) {
    const double d = close[t] - close[t - 1];
    avg_gain = (avg_gain * (n - 1) + std::max(d, 0.0)) / n;
    avg_loss = (avg_loss * (n - 1) + std::max(-d, 0.0)) / n;
    out[t] = rsi_value(avg_gain, avg_loss);
  }
  return out;
}

// Lambert CCI over the typical price; zero mean deviation maps to 0.
std::vector<double> cci(const std::vector<double>& high, const std::vector<double>& low,
                        const std::vector<double>& close, int n) {
  const std::size_t t_count = close.size();
  std::vector<double> tp(t_count);
  for (std::size_t t = 0; t < t_count; ++t) tp[t] = (high[t] + low[t] + close[t]) / 3.0;
  std::vector<double> out(t_count, kNaN);
  for (std::size_t t = n - 1; t < t_count; ++t) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += tp[t - i];
    m /= n;
    double dev = 0.0;
    for (int i = 0; i < n; ++i) dev += std::abs(tp[t - i] - m);
    dev /= n;
    out[t] = dev == 0.0 ? 0.0 : (tp[t] - m) / (0.015 * dev);
  }
  return out;
}

// Directional movement index with Wilder smoothing.
std::vector<double> dx(const std::vector<double>& high, const std::vector<double>& low,
                       const std::vector<double>& close, int n) {
  const std::size_t t_count = close.size();
  std::vector<double> out(t_count, kNaN);
  if (t_count <= static_cast<std::size_t>(n)) return out;
  std::vector<double> plus_dm(t_count, 0.0), minus_dm(t_count, 0.0), tr(t_count, 0.0);
  for (std::size_t t = 1; t < t_count; ++t) {
    const double up = high[t] - high[t - 1];
    const double down = low[t - 1] - low[t];
    plus_dm[t] = (up > down && up > 0.0) ? up : 0.0;
    minus_dm[t] = (down > up && down > 0.0) ? down : 0.0;
    tr[t] = std::max({high[t] - low[t], std::abs(high[t] - close[t - 1]),
                      std::abs(low[t] - close[t - 1])});
  }
  double s_plus = 0.0, s_minus = 0.0, s_tr = 0.0;
  for (int i = 1; i <= n; ++i) {
    s_plus += plus_dm[i];
    s_minus += minus_dm[i];
    s_tr += tr[i];
  }
  const auto dx_value = [](double p, double m, double t_range) {
    if (t_range == 0.0) return 0.0;
    const double di_p = 100.0 * p / t_range;
    const double di_m = 100.0 * m / t_range;
    const double denom = di_p + di_m;
    return denom == 0.0 ? 0.0 : 100.0 * std::abs(di_p - di_m) / denom;
  };
  out[n] = dx_value(s_plus, s_minus, s_tr);
  for (std::size_t t = n + 1; t < t_count; ++t) {
    s_plus = s_plus - s_plus / n + plus_dm[t];
    s_minus = s_minus - s_minus / n + minus_dm[t];
    s_tr = s_tr - s_tr / n + tr[t];
    out[t] = dx_value(s_plus, s_minus, s_tr);
  }
  return out;
}

// Mahalanobis distance of the day's cross-asset return vector against the
// trailing return window (pseudo-inverse covariance). Market-wide: one value
// per timestamp, broadcast to every asset by the caller.
std::vector<double> turbulence_index(const PanelData& panel, int window, int min_history) {
  const int t_count = panel.num_periods();
  const int k = panel.num_assets();
  std::vector<double> out(t_count, kNaN);
  Eigen::MatrixXd returns(t_count, k);  // row t = return from t-1 to t (row 0 unused)
  for (int t = 1; t < t_count; ++t) {
    for (int a = 0; a < k; ++a) {
      returns(t, a) = panel.close[panel.cell(t, a)] / panel.close[panel.cell(t - 1, a)] - 1.0;
    }
  }
  for (int t = min_history + 1; t < t_count; ++t) {
    const int begin = std::max(1, t - window);
    const int m = t - begin;  // trailing returns strictly before t
    if (m < 2) {
      out[t] = 0.0;
      continue;
    }
    const Eigen::MatrixXd hist = returns.middleRows(begin, m);
    const Eigen::RowVectorXd mu = hist.colwise().mean();
    const Eigen::MatrixXd centered = hist.rowwise() - mu;
    const Eigen::MatrixXd cov = centered.transpose() * centered / (m - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double tol = std::max(lambda.cwiseAbs().maxCoeff(), 0.0) * 1e-12;
    Eigen::VectorXd inv_lambda = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i) {
      if (lambda(i) > tol && lambda(i) > 0.0) inv_lambda(i) = 1.0 / lambda(i);
    }
    const Eigen::VectorXd diff = (returns.row(t) - mu).transpose();
    const Eigen::VectorXd proj = eig.eigenvectors().transpose() * diff;
    out[t] = proj.cwiseProduct(inv_lambda.cwiseProduct(proj)).sum();
  }
  return out;
}

struct IndicatorPlan {
  std::string name;
  int min_bars;  // bars needed before the first defined value
};

}  // namespace

std::vector<std::string> default_indicators() {
  return {"macd",  "boll_ub",  "boll_lb",  "rsi_30", "cci_30",
          "dx_30", "close_30", "close_60", "vix",    "turbulence"};
}

FeaturePanel compute_indicators(const PanelData& panel, const IndicatorConfig& cfg) {
  panel.validate();
  const int t_count = panel.num_periods();
  const int k = panel.num_assets();
  const int i_count = static_cast<int>(cfg.names.size());
  if (i_count == 0) fail(Errc::InvalidArgument, "no indicators requested");

  std::vector<IndicatorPlan> plans;
  plans.reserve(cfg.names.size());
  for (const auto& name : cfg.names) {
    int min_bars = 0;
    if (name == "macd") {
      min_bars = 26;
    } else if (name == "boll_ub" || name == "boll_lb") {
      min_bars = 20;
    } else if (name == "rsi_30" || name == "dx_30") {
      min_bars = 31;
    } else if (name == "cci_30" || name == "close_30") {
      min_bars = 30;
    } else if (name == "close_60") {
      min_bars = 60;
    } else if (name == "vix") {
      if (cfg.vix == nullptr) {
        fail(Errc::InvalidArgument, "indicator 'vix' requires an auxiliary series");
      }
      min_bars = 1;
    } else if (name == "turbulence") {
      min_bars = cfg.turbulence_min_history + 2;
    } else {
      fail(Errc::UnknownIndicator, "unknown indicator: " + name);
    }
    if (t_count < min_bars + 1) {
      fail(Errc::InsufficientHistory,
           "insufficient history for indicator '" + name + "': need more than " +
               std::to_string(min_bars) + " bars, have " + std::to_string(t_count));
    }
    plans.push_back({name, min_bars});
  }

  FeaturePanel fp;
  fp.feature_names = cfg.names;
  fp.features.assign(static_cast<std::size_t>(t_count) * k * i_count, kNaN);
  const auto store = [&](int t, int a, int i, double v) {
    fp.features[(static_cast<std::size_t>(t) * k + a) * i_count + i] = v;
  };

  std::vector<double> market_turbulence;
  std::vector<double> vix_col;
  for (const auto& plan : plans) {
    if (plan.name == "turbulence" && market_turbulence.empty()) {
      market_turbulence =
          turbulence_index(panel, cfg.turbulence_window, cfg.turbulence_min_history);
    }
    if (plan.name == "vix" && vix_col.empty()) {
      vix_col.assign(t_count, kNaN);
      std::size_t pos = 0;
      for (int t = 0; t < t_count; ++t) {
        while (pos + 1 < cfg.vix->timestamps.size() &&
               cfg.vix->timestamps[pos + 1] <= panel.timestamps[t]) {
          ++pos;
        }
        if (cfg.vix->timestamps[pos] <= panel.timestamps[t]) vix_col[t] = cfg.vix->values[pos];
      }
    }
  }

  for (int a = 0; a < k; ++a) {
    std::vector<double> close(t_count), high(t_count), low(t_count);
    for (int t = 0; t < t_count; ++t) {
      close[t] = panel.close[panel.cell(t, a)];
      high[t] = panel.high[panel.cell(t, a)];
      low[t] = panel.low[panel.cell(t, a)];
    }
    for (int i = 0; i < i_count; ++i) {
      const auto& name = plans[i].name;
      std::vector<double> col;
      if (name == "macd") {
        const auto fast = ema(close, 12);
        const auto slow = ema(close, 26);
        col.resize(t_count);
        for (int t = 0; t < t_count; ++t) col[t] = fast[t] - slow[t];
      } else if (name == "boll_ub" || name == "boll_lb") {
        const auto mid = sma(close, 20);
        const auto sd = rolling_std(close, 20);
        col.resize(t_count);
        const double sign = (name == "boll_ub") ? 2.0 : -2.0;
        for (int t = 0; t < t_count; ++t) col[t] = mid[t] + sign * sd[t];
      } else if (name == "rsi_30") {
        col = wilder_rsi(close, 30);
      } else if (name == "cci_30") {
        col = cci(high, low, close, 30);
      } else if (name == "dx_30") {
        col = dx(high, low, close, 30);
      } else if (name == "close_30") {
        col = sma(close, 30);
      } else if (name == "close_60") {
        col = sma(close, 60);
      } else if (name == "vix") {
        col = vix_col;
      } else {  // turbulence
        col = market_turbulence;
        for (int t = 0; t < std::min(t_count, cfg.turbulence_min_history + 1); ++t) {
          col[t] = kNaN;
        }
      }
      for (int t = 0; t < t_count; ++t) store(t, a, i, col[t]);
    }
  }

  // Warm-up: drop the common NaN prefix instead of back-filling.
  int first_valid = 0;
  for (const auto& plan : plans) first_valid = std::max(first_valid, plan.min_bars - 1);
  if (t_count - first_valid < 1) {
    fail(Errc::InsufficientHistory, "warm-up consumes the whole panel");
  }
  FeaturePanel trimmed;
  trimmed.feature_names = fp.feature_names;
  trimmed.base = panel.slice(first_valid, t_count);
  const std::size_t row = static_cast<std::size_t>(k) * i_count;
  trimmed.features.assign(fp.features.begin() + static_cast<std::ptrdiff_t>(first_valid) * static_cast<std::ptrdiff_t>(row),
                          fp.features.end());

  for (std::size_t i = 0; i < trimmed.features.size(); ++i) {
    if (!std::isfinite(trimmed.features[i])) {
      const auto feat = i % i_count;
      fail(Errc::InsufficientHistory,
           "indicator '" + trimmed.feature_names[feat] + "' undefined after warm-up trim");
    }
  }
  return trimmed;
}

}  // namespace finbench::data
