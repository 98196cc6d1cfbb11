#include "mcqf/core/tape.hpp"

#include <algorithm>

#include "mcqf/core/errors.hpp"

namespace mcqf {

namespace {
thread_local GradTape* t_active = nullptr;
}

GradTape::GradTape() : previous_(t_active) { t_active = this; }

GradTape::~GradTape() { t_active = previous_; }

GradTape* GradTape::active() { return t_active; }

void GradTape::record(const Tensor& output, BackwardFn fn) {
  entries_.push_back(Entry{output, std::move(fn)});
}

void GradTape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward() on a loss that does not depend on any parameter");
  }
  Tensor seed = loss;
  auto g = seed.grad_buffer();
  g[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // no gradient flowed into this op
    it->fn();
  }
}

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (t_active == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t != nullptr && t->defined() && t->requires_grad(); });
}

void backward(const Tensor& loss) {
  auto* tape = GradTape::active();
  if (tape == nullptr || tape->size() == 0) throw ContractError("backward() without a recorded tape");
  tape->backward(loss);
}

}  // namespace mcqf
