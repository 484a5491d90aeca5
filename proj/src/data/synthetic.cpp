#include "finbench/data/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "finbench/util/error.hpp"
#include "finbench/util/rng.hpp"

namespace finbench::data {

PanelData make_synthetic_panel(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.assets < 1 || spec.periods < 2) {
    fail(Errc::InvalidArgument, "synthetic panel needs >= 1 asset and >= 2 periods");
  }
  PanelData panel;
  for (int a = 0; a < spec.assets; ++a) {
    panel.assets.push_back("SYN" + std::string(a < 10 ? "0" : "") + std::to_string(a));
  }
  const int k = spec.assets;
  const std::size_t cells = static_cast<std::size_t>(spec.periods) * k;
  panel.open.resize(cells);
  panel.high.resize(cells);
  panel.low.resize(cells);
  panel.close.resize(cells);
  panel.volume.assign(cells, spec.volume);

  Rng rng = Rng::stream(seed, "synthetic-panel");
  std::vector<double> price(k, spec.start_price);
  for (int t = 0; t < spec.periods; ++t) {
    panel.timestamps.push_back(static_cast<std::int64_t>(t) * 86400);
    for (int a = 0; a < k; ++a) {
      const double prev = price[a];
      const double shock = spec.noise * rng.normal();
      price[a] = std::max(prev * (1.0 + spec.drift + shock), 1e-6);
      const std::size_t c = panel.cell(t, a);
      panel.open[c] = prev;
      panel.close[c] = price[a];
      panel.high[c] = std::max(prev, price[a]) * 1.001;
      panel.low[c] = std::min(prev, price[a]) * 0.999;
    }
  }
  return panel;
}

FeaturePanel attach_noise_features(const PanelData& panel, int features,
                                   std::uint64_t seed, bool noise) {
  FeaturePanel fp;
  fp.base = panel;
  for (int i = 0; i < features; ++i) fp.feature_names.push_back("f" + std::to_string(i));
  const std::size_t n = static_cast<std::size_t>(panel.num_periods()) *
                        panel.num_assets() * static_cast<std::size_t>(features);
  fp.features.assign(n, 0.0);
  if (noise) {
    Rng rng = Rng::stream(seed, "noise-features");
    for (auto& f : fp.features) f = rng.normal();
  }
  return fp;
}

}  // namespace finbench::data
