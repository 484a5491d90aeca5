#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finbench/data/panel.hpp"

namespace finbench::data {

struct FeatureSelection {
  // Kept representatives, in original column order.
  std::vector<std::string> kept;
  // Members dropped because a lower-index column in their correlation group
  // was kept.
  std::vector<std::string> dropped;
  // Zero-variance columns excluded up front (correlation undefined).
  std::vector<std::string> zero_variance;
};

// Groups features whose |Pearson correlation| >= threshold (transitive
// closure) and keeps the lowest-index column of each group.
FeatureSelection select_features(const FeaturePanel& fp, double corr_threshold);

// Projection of a panel onto a subset of feature columns, order preserved.
FeaturePanel project_features(const FeaturePanel& fp, const std::vector<std::string>& keep);

struct SplitOptions {
  // Replace real timestamps with ordinal indices 0..T-1 (timestamp
  // anonymization for withheld evaluation data).
  bool relabel_ordinal = false;
};

// Withholds the most recent ceil(fraction * T) timestamps for evaluation.
DataSplit split_temporal(const FeaturePanel& fp, double eval_fraction,
                         const SplitOptions& options = {});

// Applies one multiplicative factor per asset, drawn uniformly from
// [1 - range_pct, 1 + range_pct], to that asset's OHLC prices. Volume is
// untouched and the factor is constant over time, so per-asset return series
// are preserved exactly.
PanelData perturb_prices(const PanelData& panel, double range_pct, std::uint64_t seed);

}  // namespace finbench::data
