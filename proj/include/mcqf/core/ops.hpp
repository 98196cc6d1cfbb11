#pragma once

#include <span>

#include "mcqf/core/random.hpp"
#include "mcqf/core/tape.hpp"
#include "mcqf/core/tensor.hpp"

// Differentiable tensor operations. Every function allocates its output and,
// when a GradTape is active and an input requires grad, records a closure
// that accumulates input gradients.

namespace mcqf {

/// a[m x k] * b[k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// x[m x in] * w[in x out] + bias[out]; bias may be an undefined tensor.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

/// out[r] = table[index[r]] (embedding lookup and row broadcast).
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> index);

Tensor relu(const Tensor& x);
/// Exact (erf) GELU.
Tensor gelu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// Max-subtracted softmax along `axis` (negative counts from the back).
Tensor softmax(const Tensor& x, int axis = -1);

/// Row-wise layer normalisation of a 2-D tensor followed by gamma/beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

struct AttentionShape {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::size_t heads = 0;
  bool causal = false;
};

/// Multi-head scaled dot-product attention over packed [batch*seq x width]
/// projections. Keys at positions >= valid_len[b] are ignored; with `causal`
/// a query at t also ignores keys after t.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionShape& shape,
                 std::span<const std::size_t> valid_len);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& x, Shape shape);

/// Inverted dropout; identity when p == 0.
Tensor dropout(const Tensor& x, double p, Rng& rng);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean of rows [begin, end) of a 2-D tensor, shape [1 x cols].
Tensor mean_rows(const Tensor& x, std::size_t begin, std::size_t end);

/// Mean binary cross-entropy on logits; positives weighted by pos_weight.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets, double pos_weight = 1.0);
/// Mean softmax cross-entropy over rows whose target is >= 0.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets);
/// Mean squared error against a constant target of the same shape.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace mcqf
