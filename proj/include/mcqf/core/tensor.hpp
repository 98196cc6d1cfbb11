#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mcqf {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage. Use clone() for
/// a deep copy. Operations in ops.hpp allocate fresh outputs and record
/// themselves on the active GradTape when any input requires a gradient.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor scalar(double v) { return Tensor(Shape{1}, v); }
  /// Row-major 2-D tensor from nested rows; rows must be equally long.
  static Tensor matrix(const std::vector<std::vector<double>>& rows);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t numel() const;
  /// Leading dimension for 2-D tensors.
  std::size_t rows() const { return dim(0); }
  /// Trailing dimension for 2-D tensors.
  std::size_t cols() const { return dim(rank() - 1); }

  std::span<double> data();
  std::span<const double> data() const;
  std::vector<double>& storage();
  const std::vector<double>& storage() const;

  double item() const;
  double& operator()(std::size_t r, std::size_t c);
  double operator()(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  /// Allocates a zero gradient buffer if absent and returns it.
  std::span<double> grad_buffer() const;
  std::span<const double> grad() const;
  void zero_grad();
  void clear_grad();

  /// Deep copy of values; the copy does not require grad.
  Tensor clone() const;
  /// Shares nothing with this tensor's tape history; values are copied.
  Tensor detach() const { return clone(); }

  /// Identity comparison of the underlying storage.
  bool same(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

}  // namespace mcqf
