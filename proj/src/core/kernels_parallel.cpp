#include <algorithm>
#include <cmath>
#include <vector>

#include "mcqf/core/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mcqf::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace parallel {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;

void transpose(const double* src, double* dst, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

}  // namespace

void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (long i = 0; i < rows; ++i) {
    double* crow = c + static_cast<std::size_t>(i) * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    const double* arow = a + static_cast<std::size_t>(i) * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
               std::size_t k, bool accumulate) {
  std::vector<double> bt(n * k);
  transpose(b, bt.data(), k, n);
  matmul_nn(a, bt.data(), c, m, n, k, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  std::vector<double> at(k * m);
  transpose(a, at.data(), m, k);
  matmul_nn(at.data(), b, c, k, m, n, accumulate);
}

void softmax_rows(double* x, std::size_t rows, std::size_t n) {
  const long r = static_cast<long>(rows);
#pragma omp parallel for schedule(static) if (rows * n > kParallelWork)
  for (long i = 0; i < r; ++i) {
    double* row = x + static_cast<std::size_t>(i) * n;
    const double mx = *std::max_element(row, row + n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < n; ++j) row[j] *= inv;
  }
}

void attention_forward(const AttentionDims& d, const double* q, const double* k, const double* v,
                       const std::size_t* valid_len, double* out, double* probs) {
  const std::size_t w = d.width();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
  const long pairs = static_cast<long>(d.batch * d.heads);
#pragma omp parallel for schedule(static) if (d.batch * d.heads * d.seq * d.seq * d.head_dim > kParallelWork)
  for (long p = 0; p < pairs; ++p) {
    const std::size_t b = static_cast<std::size_t>(p) / d.heads;
    const std::size_t h = static_cast<std::size_t>(p) % d.heads;
    const std::size_t valid = std::min(valid_len[b], d.seq);
    const std::size_t base = b * d.seq;
    const std::size_t off = h * d.head_dim;
    for (std::size_t t = 0; t < d.seq; ++t) {
      double* prow = probs + ((b * d.heads + h) * d.seq + t) * d.seq;
      std::fill(prow, prow + d.seq, 0.0);
      double* orow = out + (base + t) * w + off;
      std::fill(orow, orow + d.head_dim, 0.0);
      const std::size_t lim = d.causal ? std::min(t + 1, valid) : valid;
      if (lim == 0) continue;
      const double* qrow = q + (base + t) * w + off;
      double mx = -INFINITY;
      for (std::size_t j = 0; j < lim; ++j) {
        const double* krow = k + (base + j) * w + off;
        double s = 0.0;
        for (std::size_t e = 0; e < d.head_dim; ++e) s += qrow[e] * krow[e];
        prow[j] = s * scale;
        mx = std::max(mx, prow[j]);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < lim; ++j) {
        prow[j] = std::exp(prow[j] - mx);
        sum += prow[j];
      }
      const double inv = 1.0 / sum;
      for (std::size_t j = 0; j < lim; ++j) {
        prow[j] *= inv;
        const double* vrow = v + (base + j) * w + off;
        for (std::size_t e = 0; e < d.head_dim; ++e) orow[e] += prow[j] * vrow[e];
      }
    }
  }
}

void attention_backward(const AttentionDims& d, const double* q, const double* k, const double* v,
                        const std::size_t* valid_len, const double* probs, const double* dout,
                        double* dq, double* dk, double* dv) {
  const std::size_t w = d.width();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
  const long pairs = static_cast<long>(d.batch * d.heads);
#pragma omp parallel for schedule(static) if (d.batch * d.heads * d.seq * d.seq * d.head_dim > kParallelWork)
  for (long p = 0; p < pairs; ++p) {
    const std::size_t b = static_cast<std::size_t>(p) / d.heads;
    const std::size_t h = static_cast<std::size_t>(p) % d.heads;
    const std::size_t valid = std::min(valid_len[b], d.seq);
    const std::size_t base = b * d.seq;
    const std::size_t off = h * d.head_dim;
    std::vector<double> dp(d.seq);
    for (std::size_t t = 0; t < d.seq; ++t) {
      const std::size_t lim = d.causal ? std::min(t + 1, valid) : valid;
      if (lim == 0) continue;
      const double* prow = probs + ((b * d.heads + h) * d.seq + t) * d.seq;
      const double* gorow = dout + (base + t) * w + off;
      double dot = 0.0;
      for (std::size_t j = 0; j < lim; ++j) {
        const double* vrow = v + (base + j) * w + off;
        double* dvrow = dv + (base + j) * w + off;
        double s = 0.0;
        for (std::size_t e = 0; e < d.head_dim; ++e) {
          s += gorow[e] * vrow[e];
          dvrow[e] += prow[j] * gorow[e];
        }
        dp[j] = s;
        dot += prow[j] * s;
      }
      const double* qrow = q + (base + t) * w + off;
      double* dqrow = dq + (base + t) * w + off;
      for (std::size_t j = 0; j < lim; ++j) {
        const double ds = prow[j] * (dp[j] - dot) * scale;
        const double* krow = k + (base + j) * w + off;
        double* dkrow = dk + (base + j) * w + off;
        for (std::size_t e = 0; e < d.head_dim; ++e) {
          dqrow[e] += ds * krow[e];
          dkrow[e] += ds * qrow[e];
        }
      }
    }
  }
}

void layer_norm_forward(const double* x, const double* gamma, const double* beta, double* y,
                        double* mean, double* rstd, std::size_t rows, std::size_t n, double eps) {
  const long r = static_cast<long>(rows);
#pragma omp parallel for schedule(static) if (rows * n > kParallelWork)
  for (long i = 0; i < r; ++i) {
    const double* xr = x + static_cast<std::size_t>(i) * n;
    double* yr = y + static_cast<std::size_t>(i) * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xr[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(n);
    const double rs = 1.0 / std::sqrt(var + eps);
    mean[i] = mu;
    rstd[i] = rs;
    for (std::size_t j = 0; j < n; ++j) yr[j] = (xr[j] - mu) * rs * gamma[j] + beta[j];
  }
}

void layer_norm_backward(const double* x, const double* gamma, const double* mean,
                         const double* rstd, const double* dy, double* dx, double* dgamma,
                         double* dbeta, std::size_t rows, std::size_t n) {
  const double inv_n = 1.0 / static_cast<double>(n);
  if (dx != nullptr) {
    const long r = static_cast<long>(rows);
#pragma omp parallel for schedule(static) if (rows * n > kParallelWork)
    for (long i = 0; i < r; ++i) {
      const std::size_t o = static_cast<std::size_t>(i) * n;
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double xhat = (x[o + j] - mean[i]) * rstd[i];
        const double g = dy[o + j] * gamma[j];
        s1 += g;
        s2 += g * xhat;
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double xhat = (x[o + j] - mean[i]) * rstd[i];
        const double g = dy[o + j] * gamma[j];
        dx[o + j] += rstd[i] * (g - s1 * inv_n - xhat * s2 * inv_n);
      }
    }
  }
  // Parameter reductions stay serial to keep the summation order fixed.
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t o = i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double xhat = (x[o + j] - mean[i]) * rstd[i];
      if (dgamma != nullptr) dgamma[j] += dy[o + j] * xhat;
      if (dbeta != nullptr) dbeta[j] += dy[o + j];
    }
  }
}

}  // namespace parallel
}  // namespace mcqf::kernels
