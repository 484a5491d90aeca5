#include "finbench/rl/mlp.hpp"

#include <cmath>

#include "finbench/util/error.hpp"

namespace finbench::rl {

Mlp::Mlp(std::vector<int> sizes, Activation hidden, Activation output)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) fail(Errc::InvalidArgument, "mlp needs at least two layer sizes");
  for (int s : sizes_) {
    if (s < 1) fail(Errc::InvalidArgument, "mlp layer sizes must be positive");
  }
  act_offset_.push_back(0);
  act_total_ = sizes_[0];
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weight_offset_.push_back(param_count_);
    param_count_ += sizes_[l + 1] * sizes_[l];
    bias_offset_.push_back(param_count_);
    param_count_ += sizes_[l + 1];
    pre_offset_.push_back(pre_total_);
    pre_total_ += sizes_[l + 1];
    act_offset_.push_back(act_total_);
    act_total_ += sizes_[l + 1];
  }
}

void Mlp::init_params(std::span<double> params, Rng& rng) const {
  if (params.size() != static_cast<std::size_t>(param_count_)) {
    fail(Errc::DimensionMismatch, "param buffer size mismatch");
  }
  for (int l = 0; l < num_layers(); ++l) {
    const int fan_in = sizes_[l];
    const int fan_out = sizes_[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < fan_out * fan_in; ++i) {
      params[weight_offset_[l] + i] = rng.uniform(-bound, bound);
    }
    for (int i = 0; i < fan_out; ++i) params[bias_offset_[l] + i] = 0.0;
  }
}

double Mlp::activate(double z, Activation act) const {
  switch (act) {
    case Activation::Identity:
      return z;
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Relu:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

double Mlp::activate_grad(double z, double a, Activation act) const {
  switch (act) {
    case Activation::Identity:
      return 1.0;
    case Activation::Tanh:
      return 1.0 - a * a;
    case Activation::Relu:
      return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

void Mlp::forward(std::span<const double> params, std::span<const double> x,
                  std::span<double> y) const {
  thread_local Cache scratch;
  forward_cached(params, x, y, scratch);
}

void Mlp::forward_cached(std::span<const double> params, std::span<const double> x,
                         std::span<double> y, Cache& cache) const {
  if (x.size() != static_cast<std::size_t>(input_dim()) ||
      y.size() != static_cast<std::size_t>(output_dim()) ||
      params.size() != static_cast<std::size_t>(param_count_)) {
    fail(Errc::DimensionMismatch, "mlp forward shape mismatch");
  }
  cache.pre.resize(pre_total_);
  cache.act.resize(act_total_);
  for (int i = 0; i < sizes_[0]; ++i) cache.act[i] = x[i];

  for (int l = 0; l < num_layers(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* w = params.data() + weight_offset_[l];
    const double* b = params.data() + bias_offset_[l];
    const double* a_prev = cache.act.data() + act_offset_[l];
    double* z = cache.pre.data() + pre_offset_[l];
    double* a = cache.act.data() + act_offset_[l + 1];
    const Activation act = (l + 1 == num_layers()) ? output_ : hidden_;
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) s += row[i] * a_prev[i];
      z[o] = s;
      a[o] = activate(s, act);
    }
  }
  const double* a_last = cache.act.data() + act_offset_[num_layers()];
  for (int o = 0; o < output_dim(); ++o) y[o] = a_last[o];
}

void Mlp::backward(std::span<const double> params, const Cache& cache,
                   std::span<const double> dy, std::span<double> grad,
                   std::span<double> dx) const {
  if (dy.size() != static_cast<std::size_t>(output_dim()) ||
      grad.size() != static_cast<std::size_t>(param_count_)) {
    fail(Errc::DimensionMismatch, "mlp backward shape mismatch");
  }
  std::vector<double> delta(dy.begin(), dy.end());
  std::vector<double> delta_prev;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* w = params.data() + weight_offset_[l];
    const double* z = cache.pre.data() + pre_offset_[l];
    const double* a = cache.act.data() + act_offset_[l + 1];
    const double* a_prev = cache.act.data() + act_offset_[l];
    const Activation act = (l + 1 == num_layers()) ? output_ : hidden_;

    for (int o = 0; o < out; ++o) delta[o] *= activate_grad(z[o], a[o], act);

    double* gw = grad.data() + weight_offset_[l];
    double* gb = grad.data() + bias_offset_[l];
    for (int o = 0; o < out; ++o) {
      double* row = gw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) row[i] += delta[o] * a_prev[i];
      gb[o] += delta[o];
    }

    if (l > 0 || !dx.empty()) {
      delta_prev.assign(in, 0.0);
      for (int o = 0; o < out; ++o) {
        const double* row = w + static_cast<std::size_t>(o) * in;
        const double d = delta[o];
        for (int i = 0; i < in; ++i) delta_prev[i] += row[i] * d;
      }
      if (l == 0) {
        if (dx.size() != static_cast<std::size_t>(in)) {
          fail(Errc::DimensionMismatch, "dx buffer size mismatch");
        }
        for (int i = 0; i < in; ++i) dx[i] = delta_prev[i];
        return;
      }
      delta.swap(delta_prev);
    }
  }
}

}  // namespace finbench::rl
