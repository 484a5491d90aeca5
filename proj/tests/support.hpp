#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "finbench/data/panel.hpp"
#include "finbench/data/synthetic.hpp"

namespace testsupport {

// Self-cleaning temp file seeded with `content`.
class TempFile {
 public:
  explicit TempFile(const std::string& content, const std::string& suffix = ".csv") {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("finbench_test_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++) + suffix))
                .string();
    std::ofstream out(path_);
    out << content;
  }
  ~TempFile() { std::filesystem::remove(path_); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline std::shared_ptr<const finbench::data::FeaturePanel> shared_panel(
    finbench::data::FeaturePanel fp) {
  return std::make_shared<const finbench::data::FeaturePanel>(std::move(fp));
}

// K-asset random-walk panel wrapped with `features` noise columns.
inline finbench::data::FeaturePanel make_test_panel(int assets, int periods, int features,
                                                    std::uint64_t seed, double drift = 0.0005,
                                                    double noise = 0.01) {
  finbench::data::SyntheticSpec spec;
  spec.assets = assets;
  spec.periods = periods;
  spec.drift = drift;
  spec.noise = noise;
  return finbench::data::attach_noise_features(finbench::data::make_synthetic_panel(spec, seed),
                                               features, seed + 1);
}

}  // namespace testsupport
