#include "finbench/data/loader.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "finbench/util/csv.hpp"
#include "finbench/util/error.hpp"

namespace finbench::data {

namespace {

struct RawBar {
  std::int64_t timestamp;
  std::string asset;
  double open, high, low, close, volume;
};

int require_column(const CsvTable& table, const std::string& name) {
  const auto idx = table.column(name);
  if (!idx) fail(Errc::ParseError, "missing required column: " + name);
  return *idx;
}

}  // namespace

PanelData load_ohlcv(const std::string& path, const ColumnMap& schema) {
  const CsvTable table = read_csv(path);
  const int c_ts = require_column(table, schema.timestamp);
  const int c_asset = require_column(table, schema.asset);
  const int c_open = require_column(table, schema.open);
  const int c_high = require_column(table, schema.high);
  const int c_low = require_column(table, schema.low);
  const int c_close = require_column(table, schema.close);
  const int c_volume = require_column(table, schema.volume);
  const int max_col = std::max({c_ts, c_asset, c_open, c_high, c_low, c_close, c_volume});

  std::vector<RawBar> bars;
  bars.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.line_numbers[r];
    if (static_cast<int>(row.size()) <= max_col) {
      fail(Errc::ParseError,
           "line " + std::to_string(line) + ": expected at least " +
               std::to_string(max_col + 1) + " columns, got " + std::to_string(row.size()));
    }
    const std::string& ts_text = row[c_ts];
    const std::string& asset = row[c_asset];
    const std::string* price_cells[5] = {&row[c_open], &row[c_high], &row[c_low],
                                         &row[c_close], &row[c_volume]};

    // Missing values: drop the row.
    bool missing = ts_text.empty() || asset.empty();
    for (const auto* cell : price_cells) missing = missing || cell->empty();
    if (missing) continue;

    const auto ts = parse_timestamp(ts_text);
    if (!ts) {
      fail(Errc::ParseError,
           "line " + std::to_string(line) + ": bad timestamp '" + ts_text + "'");
    }
    double values[5];
    for (int i = 0; i < 5; ++i) {
      const auto v = parse_double(*price_cells[i]);
      if (!v) {
        fail(Errc::ParseError,
             "line " + std::to_string(line) + ": bad numeric field '" + *price_cells[i] + "'");
      }
      values[i] = *v;
    }
    // Invalid market values count as missing data.
    if (!(values[0] > 0.0 && values[1] > 0.0 && values[2] > 0.0 && values[3] > 0.0) ||
        values[4] < 0.0 || !std::isfinite(values[4])) {
      continue;
    }
    bars.push_back({*ts, asset, values[0], values[1], values[2], values[3], values[4]});
  }

  std::stable_sort(bars.begin(), bars.end(), [](const RawBar& a, const RawBar& b) {
    return std::tie(a.timestamp, a.asset) < std::tie(b.timestamp, b.asset);
  });
  for (std::size_t i = 1; i < bars.size(); ++i) {
    if (bars[i].timestamp == bars[i - 1].timestamp && bars[i].asset == bars[i - 1].asset) {
      fail(Errc::DuplicateKey, "duplicate (timestamp, asset) pair: " +
                                   std::to_string(bars[i].timestamp) + ", " + bars[i].asset);
    }
  }

  std::set<std::string> asset_set;
  for (const auto& b : bars) asset_set.insert(b.asset);
  const std::size_t k = asset_set.size();

  // Keep only timestamps covered by every asset so the panel is rectangular.
  std::map<std::int64_t, std::vector<const RawBar*>> by_ts;
  for (const auto& b : bars) by_ts[b.timestamp].push_back(&b);

  PanelData panel;
  panel.assets.assign(asset_set.begin(), asset_set.end());
  for (const auto& [ts, group] : by_ts) {
    if (group.size() != k) continue;
    panel.timestamps.push_back(ts);
    for (const RawBar* b : group) {  // group is asset-sorted by construction
      panel.open.push_back(b->open);
      panel.high.push_back(b->high);
      panel.low.push_back(b->low);
      panel.close.push_back(b->close);
      panel.volume.push_back(b->volume);
    }
  }
  if (panel.timestamps.empty()) {
    fail(Errc::EmptyDataset, "no complete rows after cleaning: " + path);
  }
  panel.validate();
  return panel;
}

AuxSeries load_aux_series(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int c_ts = require_column(table, "timestamp");
  const int c_value = require_column(table, "value");
  AuxSeries series;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.line_numbers[r];
    if (row[c_ts].empty() || row[c_value].empty()) continue;
    const auto ts = parse_timestamp(row[c_ts]);
    const auto v = parse_double(row[c_value]);
    if (!ts || !v) {
      fail(Errc::ParseError, "line " + std::to_string(line) + ": bad auxiliary row");
    }
    series.timestamps.push_back(*ts);
    series.values.push_back(*v);
  }
  if (series.timestamps.empty()) fail(Errc::EmptyDataset, "empty auxiliary series: " + path);
  for (std::size_t i = 1; i < series.timestamps.size(); ++i) {
    if (series.timestamps[i] <= series.timestamps[i - 1]) {
      fail(Errc::ParseError, "auxiliary series timestamps must be strictly increasing");
    }
  }
  return series;
}

void write_feature_csv(const FeaturePanel& fp, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write: " + path);
  out << "timestamp,asset";
  for (const auto& name : fp.feature_names) out << ',' << name;
  out << '\n';
  const int t_count = fp.num_periods();
  const int k_count = fp.num_assets();
  const int i_count = fp.num_features();
  for (int t = 0; t < t_count; ++t) {
    for (int k = 0; k < k_count; ++k) {
      out << fp.base.timestamps[t] << ',' << fp.base.assets[k];
      for (int i = 0; i < i_count; ++i) out << ',' << format_double(fp.feature_at(t, k, i));
      out << '\n';
    }
  }
}

void write_panel_csv(const FeaturePanel& fp, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write: " + path);
  out << "timestamp,asset,open,high,low,close,volume";
  for (const auto& name : fp.feature_names) out << ',' << name;
  out << '\n';
  const int t_count = fp.num_periods();
  const int k_count = fp.num_assets();
  const int i_count = fp.num_features();
  for (int t = 0; t < t_count; ++t) {
    for (int k = 0; k < k_count; ++k) {
      const std::size_t c = fp.base.cell(t, k);
      out << fp.base.timestamps[t] << ',' << fp.base.assets[k] << ','
          << format_double(fp.base.open[c]) << ',' << format_double(fp.base.high[c]) << ','
          << format_double(fp.base.low[c]) << ',' << format_double(fp.base.close[c]) << ','
          << format_double(fp.base.volume[c]);
      for (int i = 0; i < i_count; ++i) out << ',' << format_double(fp.feature_at(t, k, i));
      out << '\n';
    }
  }
}

FeaturePanel read_panel_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const char* fixed[7] = {"timestamp", "asset", "open", "high", "low", "close", "volume"};
  for (int i = 0; i < 7; ++i) {
    if (!table.column(fixed[i])) fail(Errc::ParseError, std::string("missing column: ") + fixed[i]);
    if (table.header[i] != fixed[i]) fail(Errc::ParseError, "unexpected panel column order");
  }
  FeaturePanel fp;
  fp.feature_names.assign(table.header.begin() + 7, table.header.end());

  std::set<std::string> asset_set;
  for (const auto& row : table.rows) asset_set.insert(row[1]);
  fp.base.assets.assign(asset_set.begin(), asset_set.end());
  const std::size_t k = fp.base.assets.size();
  if (table.rows.size() % k != 0) fail(Errc::ParseError, "panel csv is not rectangular");

  const std::size_t i_count = fp.feature_names.size();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != 7 + i_count) {
      fail(Errc::ParseError, "line " + std::to_string(table.line_numbers[r]) + ": bad column count");
    }
    const auto ts = parse_timestamp(row[0]);
    if (!ts) fail(Errc::ParseError, "line " + std::to_string(table.line_numbers[r]) + ": bad timestamp");
    if (r % k == 0) fp.base.timestamps.push_back(*ts);
    const auto push = [&](std::vector<double>& dst, const std::string& cell) {
      const auto v = parse_double(cell);
      if (!v) fail(Errc::ParseError, "line " + std::to_string(table.line_numbers[r]) + ": bad number");
      dst.push_back(*v);
    };
    push(fp.base.open, row[2]);
    push(fp.base.high, row[3]);
    push(fp.base.low, row[4]);
    push(fp.base.close, row[5]);
    push(fp.base.volume, row[6]);
    for (std::size_t i = 0; i < i_count; ++i) push(fp.features, row[7 + i]);
  }
  fp.validate();
  return fp;
}

}  // namespace finbench::data
