#pragma once

#include <vector>

#include "finbench/env/vec_env.hpp"
#include "finbench/rl/policy.hpp"

namespace finbench::rl {

enum class BaselineMode { None, BatchMeanReturn };

struct GradientEstimate {
  std::vector<double> grad;  // matches the policy's flat parameter layout
  double baseline = 0.0;
  int trajectories = 0;
};

// Monte-Carlo score-function estimate over n trajectories:
//   (1/n) sum_j (R(tau_j) - b) sum_t grad_theta log pi(a_t | s_t),
// with R(tau) = sum_t gamma^t r_{t+1} and b = 0 or the batch-mean return.
// Equals the exact gradient of the frozen-sample surrogate
//   (1/n) sum_j (R_j - b) sum_t log pi_theta(a_t | s_t).
GradientEstimate estimate_policy_gradient(const env::TrajectoryBatch& batch,
                                          const GaussianPolicy& policy, double gamma,
                                          BaselineMode mode);

}  // namespace finbench::rl
