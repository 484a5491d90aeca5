#pragma once

#include <memory>
#include <span>
#include <vector>

#include "finbench/rl/mlp.hpp"

namespace finbench::rl {

// State -> one Q-value per discrete action level.
class QNetwork {
 public:
  virtual ~QNetwork() = default;
  virtual int state_dim() const = 0;
  virtual int num_actions() const = 0;
  virtual int param_count() const = 0;
  virtual void init(std::span<double> params, Rng& rng) const = 0;
  virtual void forward(std::span<const double> params, std::span<const double> state,
                       std::span<double> q) const = 0;
  // Accumulates dL/dparams given dL/dq (forward pass recomputed internally).
  virtual void backward(std::span<const double> params, std::span<const double> state,
                        std::span<const double> dq, std::span<double> grad) const = 0;
};

// Plain MLP head.
class MlpQNetwork final : public QNetwork {
 public:
  MlpQNetwork(int state_dim, const std::vector<int>& hidden, int actions);
  int state_dim() const override { return net_.input_dim(); }
  int num_actions() const override { return net_.output_dim(); }
  int param_count() const override { return net_.param_count(); }
  void init(std::span<double> params, Rng& rng) const override;
  void forward(std::span<const double> params, std::span<const double> state,
               std::span<double> q) const override;
  void backward(std::span<const double> params, std::span<const double> state,
                std::span<const double> dq, std::span<double> grad) const override;

 private:
  Mlp net_;
};

// Shared trunk with value and advantage streams,
// Q_a = V + A_a - mean_a'(A_a').
class DuelingQNetwork final : public QNetwork {
 public:
  DuelingQNetwork(int state_dim, const std::vector<int>& hidden, int actions);
  int state_dim() const override { return trunk_.input_dim(); }
  int num_actions() const override { return actions_; }
  int param_count() const override;
  void init(std::span<double> params, Rng& rng) const override;
  void forward(std::span<const double> params, std::span<const double> state,
               std::span<double> q) const override;
  void backward(std::span<const double> params, std::span<const double> state,
                std::span<const double> dq, std::span<double> grad) const override;

 private:
  Mlp trunk_;       // state -> activated hidden features
  Mlp value_head_;  // hidden -> 1
  Mlp adv_head_;    // hidden -> actions
  int actions_;
};

std::unique_ptr<QNetwork> make_q_network(bool dueling, int state_dim,
                                         const std::vector<int>& hidden, int actions);

// Aggregation used by the dueling head, exposed for direct verification.
void dueling_aggregate(double value, std::span<const double> advantage, std::span<double> q);

}  // namespace finbench::rl
