#include "finbench/data/panel.hpp"

#include <cmath>

#include "finbench/util/error.hpp"

namespace finbench::data {

PanelData PanelData::slice(int t_begin, int t_end) const {
  if (t_begin < 0 || t_end > num_periods() || t_begin > t_end) {
    fail(Errc::InvalidArgument, "panel slice out of range");
  }
  PanelData out;
  out.assets = assets;
  out.timestamps.assign(timestamps.begin() + t_begin, timestamps.begin() + t_end);
  const std::size_t k = assets.size();
  const auto copy_range = [&](const std::vector<double>& src, std::vector<double>& dst) {
    dst.assign(src.begin() + static_cast<std::ptrdiff_t>(t_begin) * static_cast<std::ptrdiff_t>(k),
               src.begin() + static_cast<std::ptrdiff_t>(t_end) * static_cast<std::ptrdiff_t>(k));
  };
  copy_range(open, out.open);
  copy_range(high, out.high);
  copy_range(low, out.low);
  copy_range(close, out.close);
  copy_range(volume, out.volume);
  return out;
}

void PanelData::validate() const {
  const std::size_t cells = timestamps.size() * assets.size();
  if (open.size() != cells || high.size() != cells || low.size() != cells ||
      close.size() != cells || volume.size() != cells) {
    fail(Errc::DimensionMismatch, "panel arrays do not match T*K shape");
  }
  for (std::size_t t = 1; t < timestamps.size(); ++t) {
    if (timestamps[t] <= timestamps[t - 1]) {
      fail(Errc::InvalidArgument, "timestamps not strictly increasing");
    }
  }
  for (std::size_t i = 0; i < cells; ++i) {
    if (!(open[i] > 0.0) || !(high[i] > 0.0) || !(low[i] > 0.0) || !(close[i] > 0.0)) {
      fail(Errc::InvalidArgument, "non-positive price in panel");
    }
    if (!(volume[i] >= 0.0)) {
      fail(Errc::InvalidArgument, "negative volume in panel");
    }
  }
}

int FeaturePanel::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    if (feature_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

FeaturePanel FeaturePanel::slice(int t_begin, int t_end) const {
  FeaturePanel out;
  out.base = base.slice(t_begin, t_end);
  out.feature_names = feature_names;
  const std::size_t row = base.assets.size() * feature_names.size();
  out.features.assign(
      features.begin() + static_cast<std::ptrdiff_t>(t_begin) * static_cast<std::ptrdiff_t>(row),
      features.begin() + static_cast<std::ptrdiff_t>(t_end) * static_cast<std::ptrdiff_t>(row));
  return out;
}

FeaturePanel concat_panels(const FeaturePanel& a, const FeaturePanel& b) {
  if (b.num_periods() == 0) return a;
  if (a.num_periods() == 0) return b;
  if (a.base.assets != b.base.assets || a.feature_names != b.feature_names) {
    fail(Errc::DimensionMismatch, "panels have different assets or features");
  }
  if (a.base.timestamps.back() >= b.base.timestamps.front()) {
    fail(Errc::InvalidArgument, "concatenation would break timestamp order");
  }
  FeaturePanel out = a;
  out.base.timestamps.insert(out.base.timestamps.end(), b.base.timestamps.begin(),
                             b.base.timestamps.end());
  const auto append = [](std::vector<double>& dst, const std::vector<double>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
  };
  append(out.base.open, b.base.open);
  append(out.base.high, b.base.high);
  append(out.base.low, b.base.low);
  append(out.base.close, b.base.close);
  append(out.base.volume, b.base.volume);
  append(out.features, b.features);
  return out;
}

void FeaturePanel::validate() const {
  base.validate();
  const std::size_t expected =
      static_cast<std::size_t>(base.num_periods()) * base.num_assets() * feature_names.size();
  if (features.size() != expected) {
    fail(Errc::DimensionMismatch, "feature array does not match T*K*I shape");
  }
  for (double f : features) {
    if (!std::isfinite(f)) fail(Errc::InvalidArgument, "non-finite feature value");
  }
}

}  // namespace finbench::data
