#pragma once

#include <cstdint>

#include "finbench/data/panel.hpp"

namespace finbench::data {

struct SyntheticSpec {
  int assets = 2;
  int periods = 100;
  double start_price = 100.0;
  double drift = 0.001;   // per-period relative drift
  double noise = 0.005;   // per-period relative noise scale
  double volume = 1e6;
};

// Seeded geometric random walk panel for tests and benchmarks.
PanelData make_synthetic_panel(const SyntheticSpec& spec, std::uint64_t seed);

// Wraps a panel with `features` i.i.d. standard normal feature columns
// (named f0, f1, ...). Zero columns are produced when `noise` is false.
FeaturePanel attach_noise_features(const PanelData& panel, int features,
                                   std::uint64_t seed, bool noise = true);

}  // namespace finbench::data
