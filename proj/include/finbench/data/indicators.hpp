#pragma once

#include <string>
#include <vector>

#include "finbench/data/loader.hpp"
#include "finbench/data/panel.hpp"

namespace finbench::data {

struct IndicatorConfig {
  // Output columns, in order. See default_indicators() for the standard set.
  std::vector<std::string> names;
  // Required when "vix" is requested; aligned by most recent value at or
  // before each bar.
  const AuxSeries* vix = nullptr;
  // Trailing cross-asset return window for the turbulence index.
  int turbulence_window = 252;
  int turbulence_min_history = 10;
};

// macd, boll_ub, boll_lb, rsi_30, cci_30, dx_30, close_30, close_60, vix,
// turbulence.
std::vector<std::string> default_indicators();

// Computes the requested indicator columns per asset and trims the common
// warm-up prefix so every remaining value is finite. Throws on unknown names
// or insufficient history (naming the offending indicator).
FeaturePanel compute_indicators(const PanelData& panel, const IndicatorConfig& cfg);

}  // namespace finbench::data
