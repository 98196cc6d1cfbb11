#include "mcqf/core/optim.hpp"

#include <cmath>

#include "mcqf/core/errors.hpp"

namespace mcqf {

void adam_step(ParamStore& params, AdamState& state, const AdamConfig& cfg, long t) {
  if (t < 1) throw ContractError("adam_step: step index must be >= 1, got " + std::to_string(t));
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (const auto& [name, tensor] : params.entries()) {
    if (!tensor.has_grad()) throw ContractError("adam_step: parameter '" + name + "' has no gradient");
  }
  for (auto& [name, tensor] : params.entries()) {
    Tensor p = tensor;
    auto& mom = state.moments[name];
    if (mom.m.size() != p.numel()) {
      mom.m.assign(p.numel(), 0.0);
      mom.v.assign(p.numel(), 0.0);
    }
    auto g = p.grad();
    auto w = p.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g[i];
      mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

double clip_grad_norm(ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, t] : params.entries()) {
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& [_, t] : params.entries()) {
      Tensor p = t;
      if (!p.has_grad()) continue;
      for (auto& g : p.grad_buffer()) g *= s;
    }
  }
  return norm;
}

double train_step(Adam& opt, const std::function<Tensor()>& loss_fn, double max_norm) {
  opt.zero_grad();
  double value = 0.0;
  {
    GradTape tape;
    Tensor loss = loss_fn();
    value = loss.item();
    tape.backward(loss);
  }
  if (max_norm > 0.0) clip_grad_norm(opt.params(), max_norm);
  opt.step();
  return value;
}

}  // namespace mcqf
