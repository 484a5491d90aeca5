#pragma once

#include <span>
#include <vector>

#include "finbench/util/rng.hpp"

namespace finbench::rl {

enum class Activation { Identity, Tanh, Relu };

// Fully connected network over an externally owned flat parameter vector.
// Per-layer layout: weights (out x in, row-major) then biases. Keeping theta
// flat makes optimizer steps, finite-difference checks and checkpointing
// uniform across all agent networks.
class Mlp {
 public:
  Mlp(std::vector<int> sizes, Activation hidden = Activation::Tanh,
      Activation output = Activation::Identity);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int param_count() const { return param_count_; }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }

  // Xavier-uniform weights, zero biases.
  void init_params(std::span<double> params, Rng& rng) const;

  void forward(std::span<const double> params, std::span<const double> x,
               std::span<double> y) const;

  struct Cache {
    std::vector<double> pre;  // concatenated pre-activations z_1..z_L
    std::vector<double> act;  // concatenated activations a_0 (input) .. a_L
  };

  void forward_cached(std::span<const double> params, std::span<const double> x,
                      std::span<double> y, Cache& cache) const;

  // Accumulates d(loss)/d(params) into `grad` given dy = d(loss)/d(output).
  // When `dx` is non-empty it receives d(loss)/d(input).
  void backward(std::span<const double> params, const Cache& cache,
                std::span<const double> dy, std::span<double> grad,
                std::span<double> dx = {}) const;

 private:
  double activate(double z, Activation act) const;
  double activate_grad(double z, double a, Activation act) const;

  std::vector<int> sizes_;
  Activation hidden_;
  Activation output_;
  std::vector<int> weight_offset_;  // per layer
  std::vector<int> bias_offset_;
  std::vector<int> act_offset_;     // into Cache::act
  std::vector<int> pre_offset_;     // into Cache::pre
  int param_count_ = 0;
  int act_total_ = 0;
  int pre_total_ = 0;
};

}  // namespace finbench::rl
