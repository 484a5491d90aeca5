#include <cmath>

#include "doctest.h"
#include "finbench/signals/signals.hpp"
#include "finbench/util/error.hpp"
#include "finbench/util/rng.hpp"
#include "support.hpp"

using namespace finbench;
using namespace finbench::signals;
using testsupport::TempFile;

TEST_CASE("sentiment factor formula") {
  SUBCASE("neutral score leaves any action unchanged") {
    CHECK(sentiment_adjust(3.0, 10.0) == 10.0);
    CHECK(sentiment_adjust(3.0, -7.5) == -7.5);
  }
  SUBCASE("u=5 amplifies buys: a=+10 -> 11") {
    CHECK(sentiment_scale(5.0, 10.0) == doctest::Approx(1.1));
    CHECK(sentiment_adjust(5.0, 10.0) == doctest::Approx(11.0));
  }
  SUBCASE("u=5 dampens sells: a=-10 -> -9") {
    CHECK(sentiment_scale(5.0, -10.0) == doctest::Approx(0.9));
    CHECK(sentiment_adjust(5.0, -10.0) == doctest::Approx(-9.0));
  }
  SUBCASE("zero action stays zero (sign(0) = 0)") {
    CHECK(sentiment_scale(5.0, 0.0) == 1.0);
    CHECK(sentiment_adjust(1.0, 0.0) == 0.0);
  }
  SUBCASE("out-of-range score is rejected") {
    CHECK_THROWS_AS(sentiment_adjust(0.5, 1.0), Error);
    CHECK_THROWS_AS(sentiment_adjust(5.5, 1.0), Error);
  }
}

TEST_CASE("risk penalty factor formula") {
  SUBCASE("all-neutral risk gives M = 1") {
    CHECK(risk_penalty_factor(std::vector<double>{3.0, 3.0},
                              std::vector<double>{0.4, 0.6}) == doctest::Approx(1.0));
  }
  SUBCASE("single asset q=5 gives M = 1.1") {
    CHECK(risk_penalty_factor(std::vector<double>{5.0}, std::vector<double>{1.0}) ==
          doctest::Approx(1.1));
  }
  SUBCASE("w=[0.5,0.5], q=[1,5] gives exactly 1.0") {
    CHECK(risk_penalty_factor(std::vector<double>{1.0, 5.0},
                              std::vector<double>{0.5, 0.5}) == 1.0);
  }
  SUBCASE("weights off the simplex are rejected") {
    CHECK_THROWS_AS(
        risk_penalty_factor(std::vector<double>{3.0, 3.0}, std::vector<double>{0.5, 0.6}),
        Error);
  }
  SUBCASE("reward adjustment divides by M") {
    CHECK(apply_risk_penalty(10.0, 1.1) == doctest::Approx(10.0 / 1.1));
    CHECK(apply_risk_penalty(10.0, 1.0) == 10.0);
    CHECK(apply_risk_penalty(10.0, 0.9) > 10.0);
  }
}

TEST_CASE("factors stay in [0.9, 1.1] under random valid inputs") {
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = 1 + rng.uniform_int(5);
    const double a = rng.uniform(-100.0, 100.0);
    const double l = sentiment_scale(u, a);
    CHECK(l >= 0.9);
    CHECK(l <= 1.1);
    // Adjustment never flips the action sign.
    const double adjusted = l * a;
    CHECK(adjusted * a >= 0.0);

    const double w0 = rng.uniform01();
    const std::vector<double> w = {w0, 1.0 - w0};
    const std::vector<double> q = {1.0 + rng.uniform_int(5), 1.0 + rng.uniform_int(5)};
    const double m = risk_penalty_factor(q, w);
    CHECK(m >= 0.9);
    CHECK(m <= 1.1);
  }
}

TEST_CASE("signal csv loads integer scores and validates range") {
  TempFile ok(
      "timestamp,asset,sentiment,risk\n"
      "2021-01-04,AAPL,4,2\n"
      "2021-01-05,,1,5\n");
  const SignalSeries series = load_signal_csv(ok.path());
  REQUIRE(series.records.size() == 2);
  CHECK(series.records[0].sentiment == 4);
  CHECK(series.records[1].asset.empty());  // broadcast

  TempFile bad(
      "timestamp,asset,sentiment,risk\n"
      "2021-01-04,AAPL,6,2\n");
  CHECK_THROWS_AS(load_signal_csv(bad.path()), Error);
}

TEST_CASE("align_signals appends sentiment/risk columns with neutral fill") {
  data::FeaturePanel panel = testsupport::make_test_panel(2, 4, 1, 3);
  panel.base.timestamps = {100, 200, 300, 400};
  SignalSeries signals;
  signals.records.push_back({100, "", 5, 2});

  const data::FeaturePanel out = align_signals(signals, panel);
  CHECK(out.num_features() == 3);  // I + 2
  CHECK(out.feature_names[1] == "sentiment");
  CHECK(out.feature_at(0, 0, 1) == 5.0);
  CHECK(out.feature_at(0, 1, 2) == 2.0);
  // Missing later bars fall back to neutral 3.
  CHECK(out.feature_at(1, 0, 1) == 3.0);
  CHECK(out.feature_at(3, 1, 2) == 3.0);
  // Original features pass through.
  CHECK(out.feature_at(2, 1, 0) == panel.feature_at(2, 1, 0));
}

TEST_CASE("alignment oracle: a signal between bars attaches to the next bar") {
  data::FeaturePanel panel = testsupport::make_test_panel(1, 3, 0, 5);
  panel.base.timestamps = {100, 200, 300};
  SignalSeries signals;
  signals.records.push_back({150, "", 5, 5});  // after bar 0, before bar 1

  const data::FeaturePanel out = align_signals(signals, panel);
  CHECK(out.feature_at(0, 0, 0) == 3.0);  // bar 100 must not see it
  CHECK(out.feature_at(1, 0, 0) == 5.0);  // bar 200 gets it
  CHECK(out.feature_at(2, 0, 0) == 3.0);
}

TEST_CASE("carry-forward fill persists the last seen score") {
  data::FeaturePanel panel = testsupport::make_test_panel(1, 4, 0, 5);
  panel.base.timestamps = {10, 20, 30, 40};
  SignalSeries signals;
  signals.records.push_back({20, "", 4, 1});
  const data::FeaturePanel out = align_signals(signals, panel, FillPolicy::CarryForward);
  CHECK(out.feature_at(0, 0, 0) == 3.0);
  CHECK(out.feature_at(1, 0, 0) == 4.0);
  CHECK(out.feature_at(2, 0, 0) == 4.0);
  CHECK(out.feature_at(3, 0, 1) == 1.0);
}

TEST_CASE("zero overlap is an error") {
  data::FeaturePanel panel = testsupport::make_test_panel(1, 3, 0, 5);
  panel.base.timestamps = {100, 200, 300};
  SignalSeries signals;
  signals.records.push_back({999, "", 3, 3});
  CHECK_THROWS_AS(align_signals(signals, panel), Error);
}

TEST_CASE("per-asset records apply only to their asset") {
  data::FeaturePanel panel = testsupport::make_test_panel(2, 2, 0, 5);
  panel.base.timestamps = {10, 20};
  SignalSeries signals;
  signals.records.push_back({10, panel.base.assets[1], 5, 4});
  const data::FeaturePanel out = align_signals(signals, panel);
  CHECK(out.feature_at(0, 0, 0) == 3.0);
  CHECK(out.feature_at(0, 1, 0) == 5.0);
  CHECK(out.feature_at(0, 1, 1) == 4.0);
}
