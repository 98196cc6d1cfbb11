#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcqf/core/nn.hpp"

namespace mcqf {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates, keyed by parameter name.
struct AdamState {
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  std::unordered_map<std::string, Moments> moments;
};

/// One bias-corrected Adam update at step t (t >= 1). Every parameter must
/// carry a gradient buffer.
void adam_step(ParamStore& params, AdamState& state, const AdamConfig& cfg, long t);

/// Rescales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(ParamStore& params, double max_norm);

/// Adam with an internal step counter.
class Adam {
 public:
  Adam(ParamStore params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {}

  void zero_grad() { params_.zero_grad(); }
  void step() { adam_step(params_, state_, cfg_, ++t_); }
  long steps() const { return t_; }
  ParamStore& params() { return params_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  ParamStore params_;
  AdamConfig cfg_;
  AdamState state_;
  long t_ = 0;
};

/// Zeroes gradients, evaluates loss_fn under a fresh tape, backpropagates,
/// clips to max_norm when positive and applies one Adam step. Returns the
/// loss value.
double train_step(Adam& opt, const std::function<Tensor()>& loss_fn, double max_norm);

}  // namespace mcqf
