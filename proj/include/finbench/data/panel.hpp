#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace finbench::data {

// Rectangular OHLCV record: T timestamps x K assets, every cell present.
// Price/volume arrays are row-major [t * K + k].
struct PanelData {
  std::vector<std::int64_t> timestamps;
  std::vector<std::string> assets;
  std::vector<double> open;
  std::vector<double> high;
  std::vector<double> low;
  std::vector<double> close;
  std::vector<double> volume;

  int num_periods() const { return static_cast<int>(timestamps.size()); }
  int num_assets() const { return static_cast<int>(assets.size()); }

  std::size_t cell(int t, int k) const {
    return static_cast<std::size_t>(t) * assets.size() + static_cast<std::size_t>(k);
  }

  PanelData slice(int t_begin, int t_end) const;

  // Checks strictly increasing timestamps, rectangular shape, prices > 0 and
  // volume >= 0. Throws on violation.
  void validate() const;
};

// PanelData plus I per-(t, asset) feature columns, [(t * K + k) * I + i].
struct FeaturePanel {
  PanelData base;
  std::vector<double> features;
  std::vector<std::string> feature_names;

  int num_periods() const { return base.num_periods(); }
  int num_assets() const { return base.num_assets(); }
  int num_features() const { return static_cast<int>(feature_names.size()); }

  double feature_at(int t, int k, int i) const {
    return features[(base.cell(t, k)) * feature_names.size() +
                    static_cast<std::size_t>(i)];
  }

  // Index of a named feature column, -1 if absent.
  int feature_index(const std::string& name) const;

  FeaturePanel slice(int t_begin, int t_end) const;

  void validate() const;
};

struct DataSplit {
  FeaturePanel train;
  FeaturePanel eval;
  std::int64_t boundary;  // first eval timestamp; int64 max when eval empty
};

// Appends b after a; assets, feature names and timestamp order must agree.
FeaturePanel concat_panels(const FeaturePanel& a, const FeaturePanel& b);

}  // namespace finbench::data
