#include "finbench/data/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "finbench/util/error.hpp"
#include "finbench/util/rng.hpp"
#include "finbench/util/stats.hpp"

namespace finbench::data {

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a != b) parent[std::max(a, b)] = std::min(a, b);  // lowest index wins
}

}  // namespace

FeatureSelection select_features(const FeaturePanel& fp, double corr_threshold) {
  if (!(corr_threshold > 0.0) || corr_threshold > 1.0) {
    fail(Errc::InvalidArgument, "correlation threshold must be in (0, 1]");
  }
  const int i_count = fp.num_features();
  const std::size_t samples =
      static_cast<std::size_t>(fp.num_periods()) * fp.num_assets();
  if (samples < 2) fail(Errc::InsufficientData, "need at least 2 samples per feature");

  // Column-major copies: feature i's sample vector across all (t, k).
  std::vector<std::vector<double>> cols(i_count, std::vector<double>(samples));
  for (std::size_t s = 0; s < samples; ++s) {
    for (int i = 0; i < i_count; ++i) {
      cols[i][s] = fp.features[s * i_count + i];
    }
  }

  FeatureSelection result;
  std::vector<int> live;
  for (int i = 0; i < i_count; ++i) {
    if (variance(cols[i], 1) == 0.0) {
      result.zero_variance.push_back(fp.feature_names[i]);
    } else {
      live.push_back(i);
    }
  }

  std::vector<int> parent(i_count);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t a = 0; a < live.size(); ++a) {
    for (std::size_t b = a + 1; b < live.size(); ++b) {
      const double rho = pearson(cols[live[a]], cols[live[b]]);
      if (std::isfinite(rho) && std::abs(rho) >= corr_threshold) {
        unite(parent, live[a], live[b]);
      }
    }
  }
  for (int i : live) {
    if (find_root(parent, i) == i) {
      result.kept.push_back(fp.feature_names[i]);
    } else {
      result.dropped.push_back(fp.feature_names[i]);
    }
  }
  return result;
}

FeaturePanel project_features(const FeaturePanel& fp, const std::vector<std::string>& keep) {
  std::vector<int> idx;
  idx.reserve(keep.size());
  for (const auto& name : keep) {
    const int i = fp.feature_index(name);
    if (i < 0) fail(Errc::InvalidArgument, "unknown feature: " + name);
    idx.push_back(i);
  }
  FeaturePanel out;
  out.base = fp.base;
  out.feature_names = keep;
  const std::size_t cells = static_cast<std::size_t>(fp.num_periods()) * fp.num_assets();
  out.features.reserve(cells * keep.size());
  const std::size_t i_count = fp.feature_names.size();
  for (std::size_t c = 0; c < cells; ++c) {
    for (int i : idx) out.features.push_back(fp.features[c * i_count + i]);
  }
  return out;
}

DataSplit split_temporal(const FeaturePanel& fp, double eval_fraction,
                         const SplitOptions& options) {
  if (!(eval_fraction >= 0.0) || eval_fraction >= 1.0) {
    fail(Errc::InvalidArgument, "eval fraction must be in [0, 1)");
  }
  FeaturePanel source = fp;
  if (options.relabel_ordinal) {
    for (int t = 0; t < source.num_periods(); ++t) source.base.timestamps[t] = t;
  }
  const int t_count = source.num_periods();
  const int n_eval = static_cast<int>(std::ceil(eval_fraction * t_count));
  const int n_train = t_count - n_eval;

  DataSplit split;
  split.train = source.slice(0, n_train);
  split.eval = source.slice(n_train, t_count);
  split.boundary = n_eval > 0 ? source.base.timestamps[n_train]
                              : std::numeric_limits<std::int64_t>::max();
  return split;
}

PanelData perturb_prices(const PanelData& panel, double range_pct, std::uint64_t seed) {
  if (!(range_pct >= 0.0) || range_pct > 0.5) {
    fail(Errc::InvalidArgument, "perturbation range must be in [0, 0.5]");
  }
  PanelData out = panel;
  const int k = panel.num_assets();
  Rng rng = Rng::stream(seed, "perturb-prices");
  std::vector<double> factor(k);
  for (int a = 0; a < k; ++a) factor[a] = rng.uniform(1.0 - range_pct, 1.0 + range_pct);
  for (int t = 0; t < panel.num_periods(); ++t) {
    for (int a = 0; a < k; ++a) {
      const std::size_t c = panel.cell(t, a);
      out.open[c] = panel.open[c] * factor[a];
      out.high[c] = panel.high[c] * factor[a];
      out.low[c] = panel.low[c] * factor[a];
      out.close[c] = panel.close[c] * factor[a];
    }
  }
  return out;
}

}  // namespace finbench::data
