#include <algorithm>
#include <cmath>
#include <vector>

#include "mcqf/core/kernels.hpp"

namespace mcqf::kernels::reference {

void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) s += a[i * k + kk] * b[kk * n + j];
      c[i * n + j] = s;
    }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
               std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t kk = 0; kk < k; ++kk) {
      double s = accumulate ? c[i * k + kk] : 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * b[kk * n + j];
      c[i * k + kk] = s;
    }
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  for (std::size_t kk = 0; kk < k; ++kk)
    for (std::size_t j = 0; j < n; ++j) {
      double s = accumulate ? c[kk * n + j] : 0.0;
      for (std::size_t i = 0; i < m; ++i) s += a[i * k + kk] * b[i * n + j];
      c[kk * n + j] = s;
    }
}

void softmax_rows(double* x, std::size_t rows, std::size_t n) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = x + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < n; ++j) row[j] = std::exp(row[j] - mx) / sum;
  }
}

void attention_forward(const AttentionDims& d, const double* q, const double* k, const double* v,
                       const std::size_t* valid_len, double* out, double* probs) {
  const std::size_t w = d.width();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
  std::fill(probs, probs + d.probs_size(), 0.0);
  std::fill(out, out + d.batch * d.seq * w, 0.0);
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t h = 0; h < d.heads; ++h)
      for (std::size_t t = 0; t < d.seq; ++t) {
        const std::size_t valid = std::min(valid_len[b], d.seq);
        const std::size_t lim = d.causal ? std::min(t + 1, valid) : valid;
        if (lim == 0) continue;
        std::vector<double> s(lim);
        for (std::size_t j = 0; j < lim; ++j) {
          double acc = 0.0;
          for (std::size_t e = 0; e < d.head_dim; ++e)
            acc += q[(b * d.seq + t) * w + h * d.head_dim + e] * k[(b * d.seq + j) * w + h * d.head_dim + e];
          s[j] = acc * scale;
        }
        softmax_rows(s.data(), 1, lim);
        double* prow = probs + ((b * d.heads + h) * d.seq + t) * d.seq;
        for (std::size_t j = 0; j < lim; ++j) {
          prow[j] = s[j];
          for (std::size_t e = 0; e < d.head_dim; ++e)
            out[(b * d.seq + t) * w + h * d.head_dim + e] += s[j] * v[(b * d.seq + j) * w + h * d.head_dim + e];
        }
      }
}

void attention_backward(const AttentionDims& d, const double* q, const double* k, const double* v,
                        const std::size_t* valid_len, const double* probs, const double* dout,
                        double* dq, double* dk, double* dv) {
  const std::size_t w = d.width();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t h = 0; h < d.heads; ++h)
      for (std::size_t t = 0; t < d.seq; ++t) {
        const std::size_t valid = std::min(valid_len[b], d.seq);
        const std::size_t lim = d.causal ? std::min(t + 1, valid) : valid;
        if (lim == 0) continue;
        const double* prow = probs + ((b * d.heads + h) * d.seq + t) * d.seq;
        auto at = [&](std::size_t row, std::size_t e) { return (b * d.seq + row) * w + h * d.head_dim + e; };
        std::vector<double> dp(lim, 0.0);
        for (std::size_t j = 0; j < lim; ++j)
          for (std::size_t e = 0; e < d.head_dim; ++e) {
            dp[j] += dout[at(t, e)] * v[at(j, e)];
            dv[at(j, e)] += prow[j] * dout[at(t, e)];
          }
        double dot = 0.0;
        for (std::size_t j = 0; j < lim; ++j) dot += prow[j] * dp[j];
        for (std::size_t j = 0; j < lim; ++j) {
          const double ds = prow[j] * (dp[j] - dot) * scale;
          for (std::size_t e = 0; e < d.head_dim; ++e) {
            dq[at(t, e)] += ds * k[at(j, e)];
            dk[at(j, e)] += ds * q[at(t, e)];
          }
        }
      }
}

void layer_norm_forward(const double* x, const double* gamma, const double* beta, double* y,
                        double* mean, double* rstd, std::size_t rows, std::size_t n, double eps) {
  for (std::size_t i = 0; i < rows; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += x[i * n + j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (x[i * n + j] - mu) * (x[i * n + j] - mu);
    var /= static_cast<double>(n);
    mean[i] = mu;
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = (x[i * n + j] - mu) * rstd[i] * gamma[j] + beta[j];
  }
}

void layer_norm_backward(const double* x, const double* gamma, const double* mean,
                         const double* rstd, const double* dy, double* dx, double* dgamma,
                         double* dbeta, std::size_t rows, std::size_t n) {
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> xhat(n), g(n);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      xhat[j] = (x[i * n + j] - mean[i]) * rstd[i];
      g[j] = dy[i * n + j] * gamma[j];
      s1 += g[j];
      s2 += g[j] * xhat[j];
      if (dgamma != nullptr) dgamma[j] += dy[i * n + j] * xhat[j];
      if (dbeta != nullptr) dbeta[j] += dy[i * n + j];
    }
    if (dx == nullptr) continue;
    for (std::size_t j = 0; j < n; ++j)
      dx[i * n + j] += rstd[i] * (g[j] - s1 / static_cast<double>(n) - xhat[j] * s2 / static_cast<double>(n));
  }
}

}  // namespace mcqf::kernels::reference
