#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "finbench/data/panel.hpp"

namespace finbench::signals {

// Precomputed text-derived scores: sentiment u and risk q, both integers in
// [1, 5] (3 = neutral). A blank asset means the record applies market-wide.
struct SignalRecord {
  std::int64_t timestamp;
  std::string asset;  // empty = broadcast
  int sentiment;
  int risk;
};

struct SignalSeries {
  std::vector<SignalRecord> records;  // sorted by timestamp
};

SignalSeries load_signal_csv(const std::string& path);

// l = 1 + 0.05 * (u - 3) * sign(a); kept near 1 by construction.
double sentiment_scale(double sentiment, double action);

// Returns l * a: buys are amplified under positive sentiment, sells dampened.
double sentiment_adjust(double sentiment, double action);

// M = sum_i w_i * (1 + 0.05 * (q_i - 3)) for simplex weights w.
double risk_penalty_factor(std::span<const double> risk, std::span<const double> weights);

// Reward adjustment r' = r / M. M > 1 penalizes, M < 1 boosts. Isolated here
// so the functional form can be swapped without touching the environment.
inline double apply_risk_penalty(double reward, double m) { return reward / m; }

enum class FillPolicy { Neutral, CarryForward };

// Appends "sentiment" and "risk" feature columns to the panel. A record
// attaches to the first bar whose timestamp is >= the record's timestamp
// (never to an earlier bar). Bars without an attached record are filled per
// policy. Errors when no record overlaps the panel at all.
data::FeaturePanel align_signals(const SignalSeries& signals, const data::FeaturePanel& panel,
                                 FillPolicy fill = FillPolicy::Neutral);

}  // namespace finbench::signals
