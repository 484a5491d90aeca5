#include "finbench/signals/signals.hpp"

#include <algorithm>
#include <cmath>

#include "finbench/util/csv.hpp"
#include "finbench/util/error.hpp"

namespace finbench::signals {

SignalSeries load_signal_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto c_ts = table.column("timestamp");
  const auto c_asset = table.column("asset");
  const auto c_sent = table.column("sentiment");
  const auto c_risk = table.column("risk");
  if (!c_ts || !c_asset || !c_sent || !c_risk) {
    fail(Errc::ParseError, "signal csv needs timestamp,asset,sentiment,risk columns");
  }
  SignalSeries series;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.line_numbers[r];
    const auto ts = parse_timestamp(row[*c_ts]);
    const auto u = parse_double(row[*c_sent]);
    const auto q = parse_double(row[*c_risk]);
    if (!ts || !u || !q) fail(Errc::ParseError, "line " + std::to_string(line) + ": bad signal row");
    const int ui = static_cast<int>(*u);
    const int qi = static_cast<int>(*q);
    if (ui < 1 || ui > 5 || *u != ui || qi < 1 || qi > 5 || *q != qi) {
      fail(Errc::ParseError,
           "line " + std::to_string(line) + ": scores must be integers in [1, 5]");
    }
    series.records.push_back({*ts, row[*c_asset], ui, qi});
  }
  std::stable_sort(series.records.begin(), series.records.end(),
                   [](const SignalRecord& a, const SignalRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  return series;
}

double sentiment_scale(double sentiment, double action) {
  if (!(sentiment >= 1.0 && sentiment <= 5.0)) {
    fail(Errc::InvalidArgument, "sentiment score out of [1, 5]");
  }
  const double sign = action > 0.0 ? 1.0 : (action < 0.0 ? -1.0 : 0.0);
  return 1.0 + 0.05 * (sentiment - 3.0) * sign;
}

double sentiment_adjust(double sentiment, double action) {
  return sentiment_scale(sentiment, action) * action;
}

double risk_penalty_factor(std::span<const double> risk, std::span<const double> weights) {
  if (risk.size() != weights.size()) {
    fail(Errc::DimensionMismatch, "risk/weight length mismatch");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= -1e-12)) fail(Errc::InvalidArgument, "negative portfolio weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(Errc::InvalidArgument, "weights must sum to 1");
  double m = 0.0;
  for (std::size_t i = 0; i < risk.size(); ++i) {
    if (!(risk[i] >= 1.0 && risk[i] <= 5.0)) {
      fail(Errc::InvalidArgument, "risk score out of [1, 5]");
    }
    m += weights[i] * (1.0 + 0.05 * (risk[i] - 3.0));
  }
  return m;
}

data::FeaturePanel align_signals(const SignalSeries& signals, const data::FeaturePanel& panel,
                                 FillPolicy fill) {
  const int t_count = panel.num_periods();
  const int k = panel.num_assets();
  const int i_count = panel.num_features();

  data::FeaturePanel out;
  out.base = panel.base;
  out.feature_names = panel.feature_names;
  out.feature_names.push_back("sentiment");
  out.feature_names.push_back("risk");
  const int new_i = i_count + 2;
  out.features.assign(static_cast<std::size_t>(t_count) * k * new_i, 3.0);

  const auto asset_of = [&](const std::string& name) -> int {
    for (int a = 0; a < k; ++a) {
      if (panel.base.assets[a] == name) return a;
    }
    return -1;
  };

  // attached[t*k + a] = latest record attached to bar t for asset a.
  std::vector<const SignalRecord*> attached(static_cast<std::size_t>(t_count) * k, nullptr);
  bool any = false;
  for (const auto& rec : signals.records) {
    // First bar with timestamp >= record timestamp: no look-ahead.
    const auto it = std::lower_bound(panel.base.timestamps.begin(), panel.base.timestamps.end(),
                                     rec.timestamp);
    if (it == panel.base.timestamps.end()) continue;
    const int t = static_cast<int>(it - panel.base.timestamps.begin());
    if (rec.asset.empty()) {
      for (int a = 0; a < k; ++a) attached[static_cast<std::size_t>(t) * k + a] = &rec;
      any = true;
    } else {
      const int a = asset_of(rec.asset);
      if (a >= 0) {
        attached[static_cast<std::size_t>(t) * k + a] = &rec;
        any = true;
      }
    }
  }
  if (!any) fail(Errc::InvalidArgument, "signal series does not overlap the panel");

  for (int a = 0; a < k; ++a) {
    double u = 3.0, q = 3.0;
    for (int t = 0; t < t_count; ++t) {
      const SignalRecord* rec = attached[static_cast<std::size_t>(t) * k + a];
      if (rec != nullptr) {
        u = rec->sentiment;
        q = rec->risk;
      } else if (fill == FillPolicy::Neutral) {
        u = 3.0;
        q = 3.0;
      }
      const std::size_t cell = (static_cast<std::size_t>(t) * k + a) * new_i;
      for (int i = 0; i < i_count; ++i) {
        out.features[cell + i] = panel.feature_at(t, a, i);
      }
      out.features[cell + i_count] = u;
      out.features[cell + i_count + 1] = q;
    }
  }
  return out;
}

}  // namespace finbench::signals
