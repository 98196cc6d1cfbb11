#pragma once

#include <cstddef>

// Raw numeric kernels behind the tensor ops.
//
// Two implementations share each signature:
//   mcqf::kernels::parallel   OpenMP, row-partitioned. Every output element
//                             is produced by exactly one thread with a fixed
//                             summation order, so results do not depend on
//                             the thread count.
//   mcqf::kernels::reference  Plain serial loops, kept for testing and for
//                             the benchmark target.
//
// All matrices are dense row-major.

namespace mcqf::kernels {

struct AttentionDims {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::size_t heads = 0;
  std::size_t head_dim = 0;
  bool causal = false;

  std::size_t width() const { return heads * head_dim; }
  std::size_t probs_size() const { return batch * heads * seq * seq; }
};

#define MCQF_KERNEL_DECLS                                                                         \
  /* C[m x n] (+)= A[m x k] * B[k x n] */                                                         \
  void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,       \
                 std::size_t n, bool accumulate);                                                 \
  /* C[m x k] (+)= A[m x n] * B[k x n]^T */                                                       \
  void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,       \
                 std::size_t k, bool accumulate);                                                 \
  /* C[k x n] (+)= A[m x k]^T * B[m x n] */                                                       \
  void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,       \
                 std::size_t n, bool accumulate);                                                 \
  /* Stable softmax over contiguous rows of length n, in place. */                                \
  void softmax_rows(double* x, std::size_t rows, std::size_t n);                                  \
  /* Scaled dot-product attention; probs receives batch*heads*seq*seq weights. */                 \
  void attention_forward(const AttentionDims& d, const double* q, const double* k,                \
                         const double* v, const std::size_t* valid_len, double* out,              \
                         double* probs);                                                          \
  /* Accumulates into dq, dk, dv. */                                                              \
  void attention_backward(const AttentionDims& d, const double* q, const double* k,               \
                          const double* v, const std::size_t* valid_len, const double* probs,     \
                          const double* dout, double* dq, double* dk, double* dv);                \
  /* Row-wise normalisation; mean and rstd receive one value per row. */                          \
  void layer_norm_forward(const double* x, const double* gamma, const double* beta, double* y,    \
                          double* mean, double* rstd, std::size_t rows, std::size_t n,            \
                          double eps);                                                            \
  /* Accumulates into dx, dgamma, dbeta (any may be null). */                                     \
  void layer_norm_backward(const double* x, const double* gamma, const double* mean,              \
                           const double* rstd, const double* dy, double* dx, double* dgamma,      \
                           double* dbeta, std::size_t rows, std::size_t n);

namespace parallel {
MCQF_KERNEL_DECLS
}

namespace reference {
MCQF_KERNEL_DECLS
}

#undef MCQF_KERNEL_DECLS

/// Number of OpenMP threads the parallel kernels may use (1 without OpenMP).
int max_threads();

}  // namespace mcqf::kernels
