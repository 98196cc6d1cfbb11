#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

#include "mcqf/core/tensor.hpp"

namespace mcqf {

/// Ordered record of differentiable operations for one forward pass.
///
/// Constructing a GradTape makes it the active tape for the current thread;
/// operations executed while it is active and touching a tensor that
/// requires grad are appended in execution order, which is a topological
/// order by construction. Tapes nest (the innermost wins) and are never
/// shared between threads. With no active tape nothing is recorded, so
/// inference on frozen parameters is free of shared mutable state.
class GradTape {
 public:
  using BackwardFn = std::function<void()>;

  GradTape();
  ~GradTape();
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  /// Active tape of the calling thread, or nullptr.
  static GradTape* active();

  /// Records an op producing `output`. The closure must read output's grad
  /// and accumulate into the grads of the inputs that require them.
  void record(const Tensor& output, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and runs recorded closures in reverse.
  /// Gradients accumulate into existing buffers; call zero_grad between
  /// steps.
  void backward(const Tensor& loss);

  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    Tensor output;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  GradTape* previous_ = nullptr;
};

/// True when an active tape exists and any of `inputs` requires grad.
bool should_record(std::initializer_list<const Tensor*> inputs);

/// Convenience: backward on the thread's active tape.
void backward(const Tensor& loss);

}  // namespace mcqf
