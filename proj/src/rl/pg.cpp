#include "finbench/rl/pg.hpp"

#include "finbench/util/error.hpp"

namespace finbench::rl {

GradientEstimate estimate_policy_gradient(const env::TrajectoryBatch& batch,
                                          const GaussianPolicy& policy, double gamma,
                                          BaselineMode mode) {
  if (batch.n < 1) fail(Errc::InvalidArgument, "gradient estimate needs >= 1 trajectory");
  if (batch.state_dim != policy.state_dim() || batch.action_dim != policy.action_dim()) {
    fail(Errc::DimensionMismatch, "batch/policy shape mismatch");
  }

  std::vector<double> returns(batch.n);
  for (int j = 0; j < batch.n; ++j) returns[j] = batch.discounted_return(j, gamma);

  double baseline = 0.0;
  if (mode == BaselineMode::BatchMeanReturn) {
    for (double r : returns) baseline += r;
    baseline /= batch.n;
  }

  GradientEstimate est;
  est.baseline = baseline;
  est.trajectories = batch.n;
  est.grad.assign(policy.param_count(), 0.0);
  const double inv_n = 1.0 / batch.n;
  for (int j = 0; j < batch.n; ++j) {
    const double weight = (returns[j] - baseline) * inv_n;
    if (weight == 0.0) continue;
    for (int t = 0; t < batch.lengths[j]; ++t) {
      policy.log_prob_backward(batch.state(j, t), batch.action(j, t), weight, est.grad);
    }
  }
  return est;
}

}  // namespace finbench::rl
