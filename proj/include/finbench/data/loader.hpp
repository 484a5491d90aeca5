#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finbench/data/panel.hpp"

namespace finbench::data {

// Column-name mapping from canonical fields to CSV headers.
struct ColumnMap {
  std::string timestamp = "timestamp";
  std::string asset = "asset";
  std::string open = "open";
  std::string high = "high";
  std::string low = "low";
  std::string close = "close";
  std::string volume = "volume";
};

// Loads an OHLCV CSV into a rectangular panel. Rows with missing (empty) or
// invalid (non-positive price, negative volume) cells are dropped; timestamps
// not covered by every asset are dropped afterwards to keep the panel
// rectangular. Unparsable cells raise a parse error with the line number;
// duplicate (timestamp, asset) pairs and empty results are errors.
PanelData load_ohlcv(const std::string& path, const ColumnMap& schema = {});

// Single-column auxiliary series (e.g. a volatility index): rows are
// `timestamp,asset,value` with a blank asset meaning market-wide broadcast.
struct AuxSeries {
  std::vector<std::int64_t> timestamps;  // strictly increasing
  std::vector<double> values;
};

AuxSeries load_aux_series(const std::string& path);

// Writes `timestamp,asset,<feature...>` rows for audit.
void write_feature_csv(const FeaturePanel& fp, const std::string& path);

// Full lossless dump (`timestamp,asset,open,...,volume,<feature...>`) used to
// hand ingested data to later pipeline stages.
void write_panel_csv(const FeaturePanel& fp, const std::string& path);
FeaturePanel read_panel_csv(const std::string& path);

}  // namespace finbench::data
