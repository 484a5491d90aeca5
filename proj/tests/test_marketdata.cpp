#include <cmath>
#include <numeric>

#include "doctest.h"
#include "finbench/data/features.hpp"
#include "finbench/data/indicators.hpp"
#include "finbench/data/loader.hpp"
#include "finbench/util/error.hpp"
#include "finbench/util/rng.hpp"
#include "finbench/util/stats.hpp"
#include "support.hpp"

using namespace finbench;
using namespace finbench::data;
using testsupport::TempFile;

namespace {

PanelData constant_close_panel(int periods, double close = 50.0) {
  PanelData p;
  p.assets = {"AAA"};
  for (int t = 0; t < periods; ++t) {
    p.timestamps.push_back(t * 86400);
    p.open.push_back(close);
    p.high.push_back(close);
    p.low.push_back(close);
    p.close.push_back(close);
    p.volume.push_back(1000.0);
  }
  return p;
}

}  // namespace

TEST_CASE("load_ohlcv parses a plain csv row") {
  TempFile file(
      "timestamp,asset,open,high,low,close,volume\n"
      "2021-01-04,AAPL,133.5,134.0,132.1,133.9,1000000\n"
      "2021-01-05,AAPL,133.9,135.0,133.0,134.5,900000\n");
  const PanelData panel = load_ohlcv(file.path());
  CHECK(panel.num_periods() == 2);
  CHECK(panel.num_assets() == 1);
  CHECK(panel.close[0] == doctest::Approx(133.9));
  CHECK(panel.assets[0] == "AAPL");
  CHECK(panel.timestamps[0] < panel.timestamps[1]);
}

TEST_CASE("load_ohlcv drops a row with a missing value") {
  TempFile file(
      "timestamp,asset,open,high,low,close,volume\n"
      "2021-01-04,AAPL,133.5,134.0,132.1,133.9,1000000\n"
      "2021-01-05,AAPL,133.9,135.0,133.0,134.5,\n"
      "2021-01-06,AAPL,134.5,136.0,134.0,135.5,800000\n");
  const PanelData panel = load_ohlcv(file.path());
  CHECK(panel.num_periods() == 2);  // one row dropped
}

TEST_CASE("load_ohlcv rejects duplicate (timestamp, asset) pairs") {
  TempFile file(
      "timestamp,asset,open,high,low,close,volume\n"
      "2021-01-04,AAPL,1,2,1,1.5,10\n"
      "2021-01-04,AAPL,1,2,1,1.6,10\n");
  CHECK_THROWS_WITH_AS(load_ohlcv(file.path()), doctest::Contains("duplicate"), Error);
}

TEST_CASE("load_ohlcv reports parse errors with line numbers") {
  TempFile file(
      "timestamp,asset,open,high,low,close,volume\n"
      "2021-01-04,AAPL,1,2,1,1.5,10\n"
      "2021-01-05,AAPL,1,2,1,garbage,10\n");
  CHECK_THROWS_WITH_AS(load_ohlcv(file.path()), doctest::Contains("line 3"), Error);
}

TEST_CASE("load_ohlcv errors on an empty result") {
  TempFile file("timestamp,asset,open,high,low,close,volume\n");
  CHECK_THROWS_AS(load_ohlcv(file.path()), Error);
}

TEST_CASE("load_ohlcv keeps only timestamps covered by every asset") {
  TempFile file(
      "timestamp,asset,open,high,low,close,volume\n"
      "2021-01-04,AAPL,1,2,1,1.5,10\n"
      "2021-01-04,MSFT,1,2,1,1.5,10\n"
      "2021-01-05,AAPL,1,2,1,1.5,10\n");
  const PanelData panel = load_ohlcv(file.path());
  CHECK(panel.num_periods() == 1);
  CHECK(panel.num_assets() == 2);
}

TEST_CASE("constant close series: macd 0, bands collapse, rsi 50") {
  const PanelData panel = constant_close_panel(80);
  IndicatorConfig cfg;
  cfg.names = {"macd", "boll_ub", "boll_lb", "rsi_30"};
  const FeaturePanel fp = compute_indicators(panel, cfg);
  REQUIRE(fp.num_periods() > 0);
  for (int t = 0; t < fp.num_periods(); ++t) {
    CHECK(fp.feature_at(t, 0, 0) == doctest::Approx(0.0));      // macd
    CHECK(fp.feature_at(t, 0, 1) == doctest::Approx(50.0));     // boll_ub
    CHECK(fp.feature_at(t, 0, 2) == doctest::Approx(50.0));     // boll_lb
    CHECK(fp.feature_at(t, 0, 3) == doctest::Approx(50.0));     // flat rsi
  }
}

TEST_CASE("strictly increasing close series: rsi_30 = 100") {
  // Oracle: Wilder's definition applied by hand to a 31-point ramp. With no
  // losses in the window, avg_loss = 0, so RSI = 100 - 100/(1 + inf) = 100.
  PanelData panel;
  panel.assets = {"AAA"};
  for (int t = 0; t < 40; ++t) {
    const double c = 100.0 + t;
    panel.timestamps.push_back(t * 86400);
    panel.open.push_back(c);
    panel.high.push_back(c);
    panel.low.push_back(c);
    panel.close.push_back(c);
    panel.volume.push_back(1.0);
  }
  IndicatorConfig cfg;
  cfg.names = {"rsi_30"};
  const FeaturePanel fp = compute_indicators(panel, cfg);
  for (int t = 0; t < fp.num_periods(); ++t) {
    CHECK(fp.feature_at(t, 0, 0) == doctest::Approx(100.0));
  }
}

TEST_CASE("sma columns match a direct windowed average") {
  const FeaturePanel base = testsupport::make_test_panel(2, 90, 0, 7);
  IndicatorConfig cfg;
  cfg.names = {"close_30"};
  const FeaturePanel fp = compute_indicators(base.base, cfg);
  const int warmup = base.base.num_periods() - fp.num_periods();
  for (int t = 0; t < fp.num_periods(); t += 13) {
    for (int k = 0; k < 2; ++k) {
      double sum = 0.0;
      for (int i = 0; i < 30; ++i) {
        sum += base.base.close[base.base.cell(warmup + t - i, k)];
      }
      CHECK(fp.feature_at(t, k, 0) == doctest::Approx(sum / 30.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("unknown indicator and insufficient history raise named errors") {
  const PanelData panel = constant_close_panel(80);
  IndicatorConfig bad;
  bad.names = {"zigzag"};
  CHECK_THROWS_WITH_AS(compute_indicators(panel, bad), doctest::Contains("zigzag"), Error);

  IndicatorConfig sixty;
  sixty.names = {"close_60"};
  const PanelData tiny = constant_close_panel(40);
  CHECK_THROWS_WITH_AS(compute_indicators(tiny, sixty), doctest::Contains("close_60"), Error);
}

TEST_CASE("vix passthrough aligns the most recent value at or before each bar") {
  const PanelData panel = constant_close_panel(5);
  AuxSeries vix;
  vix.timestamps = {0, 2 * 86400};
  vix.values = {15.0, 22.0};
  IndicatorConfig cfg;
  cfg.names = {"vix"};
  cfg.vix = &vix;
  const FeaturePanel fp = compute_indicators(panel, cfg);
  CHECK(fp.feature_at(0, 0, 0) == doctest::Approx(15.0));
  CHECK(fp.feature_at(1, 0, 0) == doctest::Approx(15.0));
  CHECK(fp.feature_at(2, 0, 0) == doctest::Approx(22.0));
  CHECK(fp.feature_at(4, 0, 0) == doctest::Approx(22.0));
}

TEST_CASE("turbulence is zero-ish on iid data and spikes on a shock") {
  SyntheticSpec spec;
  spec.assets = 3;
  spec.periods = 120;
  spec.drift = 0.0;
  spec.noise = 0.01;
  PanelData panel = make_synthetic_panel(spec, 11);
  // Inject a crash at the second-to-last bar.
  const int t_shock = panel.num_periods() - 2;
  for (int k = 0; k < 3; ++k) {
    for (int t = t_shock; t < panel.num_periods(); ++t) {
      const std::size_t c = panel.cell(t, k);
      panel.close[c] *= 0.7;
      panel.open[c] *= 0.7;
      panel.high[c] *= 0.7;
      panel.low[c] *= 0.7;
    }
  }
  IndicatorConfig cfg;
  cfg.names = {"turbulence"};
  const FeaturePanel fp = compute_indicators(panel, cfg);
  const int t_local = t_shock - (panel.num_periods() - fp.num_periods());
  double typical = 0.0;
  for (int t = 0; t < t_local; ++t) typical = std::max(typical, fp.feature_at(t, 0, 0));
  CHECK(fp.feature_at(t_local, 0, 0) > 5.0 * typical);
  // Market-wide: identical across assets.
  CHECK(fp.feature_at(t_local, 0, 0) == fp.feature_at(t_local, 2, 0));
}

TEST_CASE("indicators are deterministic functions of the panel") {
  const FeaturePanel base = testsupport::make_test_panel(2, 100, 0, 3);
  IndicatorConfig cfg;
  cfg.names = {"macd", "boll_ub", "rsi_30", "close_30"};
  const FeaturePanel a = compute_indicators(base.base, cfg);
  const FeaturePanel b = compute_indicators(base.base, cfg);
  CHECK(a.features == b.features);
}

TEST_CASE("select_features groups correlated columns and keeps the first") {
  // x, y = 2x + 3 (rho = 1), and independent noise.
  Rng rng(123);
  const int n = 100;
  FeaturePanel fp;
  fp.base = constant_close_panel(n);
  fp.feature_names = {"x", "y", "noise"};
  for (int t = 0; t < n; ++t) {
    const double x = rng.normal();
    const double z = rng.normal();
    fp.features.push_back(x);
    fp.features.push_back(2.0 * x + 3.0);
    fp.features.push_back(z);
  }
  const FeatureSelection sel = select_features(fp, 0.95);
  CHECK(sel.kept == std::vector<std::string>{"x", "noise"});
  CHECK(sel.dropped == std::vector<std::string>{"y"});
  CHECK(sel.zero_variance.empty());
}

TEST_CASE("select_features keeps independent columns (seeded oracle)") {
  Rng rng(0);
  const int n = 100;
  std::vector<double> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  const double rho = pearson(a, b);
  REQUIRE(std::abs(rho) < 0.95);  // verified below threshold for this seed

  FeaturePanel fp;
  fp.base = constant_close_panel(n);
  fp.feature_names = {"a", "b"};
  for (int i = 0; i < n; ++i) {
    fp.features.push_back(a[i]);
    fp.features.push_back(b[i]);
  }
  const FeatureSelection sel = select_features(fp, 0.95);
  CHECK(sel.kept.size() == 2);
}

TEST_CASE("select_features excludes zero-variance columns with a warning record") {
  FeaturePanel fp;
  fp.base = constant_close_panel(50);
  fp.feature_names = {"flat", "live"};
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    fp.features.push_back(7.0);
    fp.features.push_back(rng.normal());
  }
  const FeatureSelection sel = select_features(fp, 0.9);
  CHECK(sel.zero_variance == std::vector<std::string>{"flat"});
  CHECK(sel.kept == std::vector<std::string>{"live"});
}

TEST_CASE("select_features output is invariant to duplicating a grouped feature") {
  Rng rng(9);
  const int n = 80;
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();

  FeaturePanel two;
  two.base = constant_close_panel(n);
  two.feature_names = {"x", "x_copy"};
  FeaturePanel three;
  three.base = two.base;
  three.feature_names = {"x", "x_copy", "x_copy2"};
  for (int i = 0; i < n; ++i) {
    two.features.push_back(x[i]);
    two.features.push_back(x[i]);
    three.features.push_back(x[i]);
    three.features.push_back(x[i]);
    three.features.push_back(x[i]);
  }
  CHECK(select_features(two, 0.95).kept == select_features(three, 0.95).kept);
}

TEST_CASE("split_temporal withholds the most recent ceil(fraction * T)") {
  const FeaturePanel fp = testsupport::make_test_panel(2, 100, 1, 21);
  const DataSplit split = split_temporal(fp, 0.15);
  CHECK(split.train.num_periods() == 85);
  CHECK(split.eval.num_periods() == 15);
  CHECK(split.train.base.timestamps.back() < split.eval.base.timestamps.front());
  CHECK(split.boundary == split.eval.base.timestamps.front());

  const DataSplit none = split_temporal(fp, 0.0);
  CHECK(none.train.num_periods() == 100);
  CHECK(none.eval.num_periods() == 0);
}

TEST_CASE("split_temporal concatenation reproduces the source rows") {
  const FeaturePanel fp = testsupport::make_test_panel(3, 41, 2, 4);
  const DataSplit split = split_temporal(fp, 0.3);
  const FeaturePanel joined = concat_panels(split.train, split.eval);
  CHECK(joined.base.timestamps == fp.base.timestamps);
  CHECK(joined.base.close == fp.base.close);
  CHECK(joined.features == fp.features);
}

TEST_CASE("split_temporal can relabel timestamps ordinally") {
  const FeaturePanel fp = testsupport::make_test_panel(1, 10, 0, 2);
  SplitOptions opt;
  opt.relabel_ordinal = true;
  const DataSplit split = split_temporal(fp, 0.2, opt);
  CHECK(split.train.base.timestamps.front() == 0);
  CHECK(split.eval.base.timestamps.back() == 9);
}

TEST_CASE("perturb_prices basics") {
  const PanelData panel = testsupport::make_test_panel(4, 60, 0, 33).base;

  SUBCASE("range 0 is the identity") {
    const PanelData same = perturb_prices(panel, 0.0, 1);
    CHECK(same.close == panel.close);
    CHECK(same.open == panel.open);
  }
  SUBCASE("ratios stay inside [0.99, 1.01] for range 0.01") {
    const PanelData p = perturb_prices(panel, 0.01, 2);
    for (std::size_t i = 0; i < p.close.size(); ++i) {
      const double ratio = p.close[i] / panel.close[i];
      CHECK(ratio >= 0.99);
      CHECK(ratio <= 1.01);
    }
    CHECK(p.volume == panel.volume);
  }
  SUBCASE("same seed reproduces bit-identical output") {
    const PanelData a = perturb_prices(panel, 0.01, 3);
    const PanelData b = perturb_prices(panel, 0.01, 3);
    CHECK(a.close == b.close);
    CHECK(a.open == b.open);
  }
  SUBCASE("per-asset factor preserves return series exactly") {
    const PanelData p = perturb_prices(panel, 0.01, 4);
    for (int k = 0; k < panel.num_assets(); ++k) {
      for (int t = 1; t < panel.num_periods(); ++t) {
        const double orig = panel.close[panel.cell(t, k)] / panel.close[panel.cell(t - 1, k)];
        const double pert = p.close[p.cell(t, k)] / p.close[p.cell(t - 1, k)];
        CHECK(pert == doctest::Approx(orig).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("feature csv export and panel round trip") {
  const FeaturePanel fp = testsupport::make_test_panel(2, 8, 3, 77);
  TempFile file("", ".csv");
  write_panel_csv(fp, file.path());
  const FeaturePanel back = read_panel_csv(file.path());
  CHECK(back.base.timestamps == fp.base.timestamps);
  CHECK(back.base.close == fp.base.close);
  CHECK(back.features == fp.features);
  CHECK(back.feature_names == fp.feature_names);
}
