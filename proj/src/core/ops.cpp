#include "mcqf/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/kernels.hpp"

namespace mcqf {

namespace k = kernels::parallel;

namespace {

void require_2d(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + " expects a 2-D tensor, got " + shape_str(t.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void mark(Tensor& out, GradTape::BackwardFn fn) {
  out.set_requires_grad(true);
  GradTape::active()->record(out, std::move(fn));
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  Tensor out(x.shape());
  auto xs = x.data();
  auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = fwd(xs[i]);
  if (should_record({&x})) {
    mark(out, [x, out, deriv]() mutable {
      auto g = out.grad();
      auto gx = x.grad_buffer();
      auto xs = x.data();
      auto ys = out.data();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xs[i], ys[i]);
    });
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), kk = a.cols(), n = b.cols();
  Tensor out(Shape{m, n});
  k::matmul_nn(a.data().data(), b.data().data(), out.data().data(), m, kk, n, false);
  if (should_record({&a, &b})) {
    mark(out, [a, b, out, m, kk, n]() mutable {
      const double* g = out.grad().data();
      if (a.requires_grad()) k::matmul_nt(g, b.data().data(), a.grad_buffer().data(), m, n, kk, true);
      if (b.requires_grad()) k::matmul_tn(a.data().data(), g, b.grad_buffer().data(), m, kk, n, true);
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require_2d(x, "linear");
  require_2d(w, "linear");
  if (x.cols() != w.rows()) {
    throw ShapeError("linear: input " + shape_str(x.shape()) + " does not fit weight " + shape_str(w.shape()));
  }
  const std::size_t m = x.rows(), kk = x.cols(), n = w.cols();
  if (bias.defined() && bias.numel() != n) {
    throw ShapeError("linear: bias " + shape_str(bias.shape()) + " does not fit weight " + shape_str(w.shape()));
  }
  Tensor out(Shape{m, n});
  double* o = out.data().data();
  if (bias.defined()) {
    const double* bv = bias.data().data();
    for (std::size_t i = 0; i < m; ++i) std::copy(bv, bv + n, o + i * n);
  }
  k::matmul_nn(x.data().data(), w.data().data(), o, m, kk, n, bias.defined());
  if (should_record({&x, &w, &bias})) {
    mark(out, [x, w, bias, out, m, kk, n]() mutable {
      const double* g = out.grad().data();
      if (x.requires_grad()) k::matmul_nt(g, w.data().data(), x.grad_buffer().data(), m, n, kk, true);
      if (w.requires_grad()) k::matmul_tn(x.data().data(), g, w.grad_buffer().data(), m, kk, n, true);
      if (bias.defined() && bias.requires_grad()) {
        auto gb = bias.grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  Tensor out(a.shape());
  auto as = a.data(), bs = b.data();
  auto os = out.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = as[i] + bs[i];
  if (should_record({&a, &b})) {
    mark(out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  Tensor out(a.shape());
  auto as = a.data(), bs = b.data();
  auto os = out.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = as[i] - bs[i];
  if (should_record({&a, &b})) {
    mark(out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  Tensor out(a.shape());
  auto as = a.data(), bs = b.data();
  auto os = out.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = as[i] * bs[i];
  if (should_record({&a, &b})) {
    mark(out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        auto bs = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bs[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        auto as = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * as[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double v) { return v * s; }, [s](double, double) { return s; });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> index) {
  require_2d(table, "gather_rows");
  if (index.empty()) throw ShapeError("gather_rows: empty index");
  const std::size_t n = table.cols(), vocab = table.rows();
  Tensor out(Shape{index.size(), n});
  const double* t = table.data().data();
  double* o = out.data().data();
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= vocab) {
      throw ContractError("gather_rows: index " + std::to_string(index[r]) + " out of range for " +
                          std::to_string(vocab) + " rows");
    }
    std::copy(t + index[r] * n, t + (index[r] + 1) * n, o + r * n);
  }
  if (should_record({&table})) {
    std::vector<std::size_t> idx(index.begin(), index.end());
    mark(out, [table, out, idx = std::move(idx), n]() mutable {
      const double* g = out.grad().data();
      double* gt = table.grad_buffer().data();
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < n; ++j) gt[idx[r] * n + j] += g[r * n + j];
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  return unary(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)); },
      [](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
        const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + v * pdf;
      });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softmax(const Tensor& x, int axis) {
  const auto& s = x.shape();
  const int r = static_cast<int>(s.size());
  const int ax = axis < 0 ? r + axis : axis;
  if (ax < 0 || ax >= r) throw ShapeError("softmax: axis out of range for " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= s[i];
  for (int i = ax + 1; i < r; ++i) inner *= s[i];
  const std::size_t n = s[ax];

  Tensor out(s);
  auto xs = x.data();
  auto os = out.data();
  if (inner == 1) {
    std::copy(xs.begin(), xs.end(), os.begin());
    k::softmax_rows(os.data(), outer, n);
  } else {
    std::vector<double> line(n);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t in = 0; in < inner; ++in) {
        for (std::size_t j = 0; j < n; ++j) line[j] = xs[(o * n + j) * inner + in];
        k::softmax_rows(line.data(), 1, n);
        for (std::size_t j = 0; j < n; ++j) os[(o * n + j) * inner + in] = line[j];
      }
  }
  if (should_record({&x})) {
    mark(out, [x, out, outer, inner, n]() mutable {
      auto g = out.grad();
      auto y = out.data();
      auto gx = x.grad_buffer();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t i = (o * n + j) * inner + in;
            dot += y[i] * g[i];
          }
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t i = (o * n + j) * inner + in;
            gx[i] += y[i] * (g[i] - dot);
          }
        }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_2d(x, "layer_norm");
  const std::size_t rows = x.rows(), n = x.cols();
  if (gamma.numel() != n || beta.numel() != n) {
    throw ShapeError("layer_norm: affine parameters do not match width " + std::to_string(n));
  }
  Tensor out(x.shape());
  auto stats = std::make_shared<std::vector<double>>(2 * rows);
  k::layer_norm_forward(x.data().data(), gamma.data().data(), beta.data().data(), out.data().data(),
                        stats->data(), stats->data() + rows, rows, n, eps);
  if (should_record({&x, &gamma, &beta})) {
    mark(out, [x, gamma, beta, out, stats, rows, n]() mutable {
      k::layer_norm_backward(x.data().data(), gamma.data().data(), stats->data(), stats->data() + rows,
                             out.grad().data(), x.requires_grad() ? x.grad_buffer().data() : nullptr,
                             gamma.requires_grad() ? gamma.grad_buffer().data() : nullptr,
                             beta.requires_grad() ? beta.grad_buffer().data() : nullptr, rows, n);
    });
  }
  return out;
}

Tensor attention(const Tensor& q, const Tensor& kt, const Tensor& v, const AttentionShape& shape,
                 std::span<const std::size_t> valid_len) {
  require_2d(q, "attention");
  require_same(q, kt, "attention");
  require_same(q, v, "attention");
  if (shape.heads == 0 || q.cols() % shape.heads != 0) {
    throw ShapeError("attention: width " + std::to_string(q.cols()) + " not divisible into " +
                     std::to_string(shape.heads) + " heads");
  }
  if (q.rows() != shape.batch * shape.seq || valid_len.size() != shape.batch) {
    throw ShapeError("attention: packed rows " + std::to_string(q.rows()) + " do not match batch " +
                     std::to_string(shape.batch) + " x seq " + std::to_string(shape.seq));
  }
  kernels::AttentionDims d{shape.batch, shape.seq, shape.heads, q.cols() / shape.heads, shape.causal};
  Tensor out(q.shape());
  auto probs = std::make_shared<std::vector<double>>(d.probs_size());
  std::vector<std::size_t> lens(valid_len.begin(), valid_len.end());
  k::attention_forward(d, q.data().data(), kt.data().data(), v.data().data(), lens.data(), out.data().data(),
                       probs->data());
  if (should_record({&q, &kt, &v})) {
    mark(out, [q, kt, v, out, probs, d, lens = std::move(lens)]() mutable {
      // Scratch buffers stand in for inputs that do not need gradients.
      std::vector<double> sq, sk, sv;
      auto grad_or_scratch = [](const Tensor& t, std::vector<double>& scratch) -> double* {
        if (t.requires_grad()) return t.grad_buffer().data();
        scratch.assign(t.numel(), 0.0);
        return scratch.data();
      };
      k::attention_backward(d, q.data().data(), kt.data().data(), v.data().data(), lens.data(), probs->data(),
                            out.grad().data(), grad_or_scratch(q, sq), grad_or_scratch(kt, sk),
                            grad_or_scratch(v, sv));
    });
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_2d(a, "concat_cols");
  require_2d(b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row counts differ, " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), na = a.cols(), nb = b.cols();
  Tensor out(Shape{m, na + nb});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.data().data() + i * na, na, out.data().data() + i * (na + nb));
    std::copy_n(b.data().data() + i * nb, nb, out.data().data() + i * (na + nb) + na);
  }
  if (should_record({&a, &b})) {
    mark(out, [a, b, out, m, na, nb]() mutable {
      const double* g = out.grad().data();
      if (a.requires_grad()) {
        double* ga = a.grad_buffer().data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < na; ++j) ga[i * na + j] += g[i * (na + nb) + j];
      }
      if (b.requires_grad()) {
        double* gb = b.grad_buffer().data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < nb; ++j) gb[i * nb + j] += g[i * (na + nb) + na + j];
      }
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_2d(x, "slice_cols");
  if (begin >= end || end > x.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for " + shape_str(x.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols(), w = end - begin;
  Tensor out(Shape{m, w});
  for (std::size_t i = 0; i < m; ++i) std::copy_n(x.data().data() + i * n + begin, w, out.data().data() + i * w);
  if (should_record({&x})) {
    mark(out, [x, out, m, n, w, begin]() mutable {
      const double* g = out.grad().data();
      double* gx = x.grad_buffer().data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) gx[i * n + begin + j] += g[i * w + j];
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " cannot become " + shape_str(shape));
  }
  Tensor out(std::move(shape), x.storage());
  if (should_record({&x})) {
    mark(out, [x, out]() mutable {
      auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  const double inv = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  for (auto& m : *mask) m = keep(rng) ? inv : 0.0;
  Tensor out(x.shape());
  auto xs = x.data();
  auto os = out.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = xs[i] * (*mask)[i];
  if (should_record({&x})) {
    mark(out, [x, out, mask]() mutable {
      auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor out = Tensor::scalar(s);
  if (should_record({&x})) {
    mark(out, [x, out]() mutable {
      const double g = out.grad()[0];
      for (auto& gx : x.grad_buffer()) gx += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mean_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_2d(x, "mean_rows");
  if (begin >= end || end > x.rows()) {
    throw ShapeError("mean_rows: row range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for " + shape_str(x.shape()));
  }
  const std::size_t n = x.cols();
  const double inv = 1.0 / static_cast<double>(end - begin);
  Tensor out(Shape{1, n});
  double* o = out.data().data();
  for (std::size_t r = begin; r < end; ++r)
    for (std::size_t j = 0; j < n; ++j) o[j] += x(r, j);
  for (std::size_t j = 0; j < n; ++j) o[j] *= inv;
  if (should_record({&x})) {
    mark(out, [x, out, begin, end, n, inv]() mutable {
      const double* g = out.grad().data();
      double* gx = x.grad_buffer().data();
      for (std::size_t r = begin; r < end; ++r)
        for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += g[j] * inv;
    });
  }
  return out;
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets, double pos_weight) {
  if (logits.numel() != targets.size()) {
    throw ShapeError("bce_with_logits: " + std::to_string(logits.numel()) + " logits vs " +
                     std::to_string(targets.size()) + " targets");
  }
  const std::size_t n = targets.size();
  auto zs = logits.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = zs[i], y = targets[i];
    const double sp_neg = std::log1p(std::exp(-std::abs(z))) + std::max(-z, 0.0);  // -log sigmoid(z)
    const double sp_pos = std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0);   // -log(1 - sigmoid(z))
    total += pos_weight * y * sp_neg + (1.0 - y) * sp_pos;
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(n));
  if (should_record({&logits})) {
    std::vector<double> ys(targets.begin(), targets.end());
    mark(out, [logits, out, ys = std::move(ys), pos_weight]() mutable {
      const double g = out.grad()[0] / static_cast<double>(ys.size());
      auto zs = logits.data();
      auto gz = logits.grad_buffer();
      for (std::size_t i = 0; i < ys.size(); ++i) {
        const double z = zs[i];
        const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        gz[i] += g * (pos_weight * ys[i] * (s - 1.0) + (1.0 - ys[i]) * s);
      }
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets) {
  require_2d(logits, "cross_entropy");
  const std::size_t m = logits.rows(), n = logits.cols();
  if (targets.size() != m) {
    throw ShapeError("cross_entropy: " + std::to_string(m) + " rows vs " + std::to_string(targets.size()) +
                     " targets");
  }
  auto probs = std::make_shared<std::vector<double>>(logits.storage());
  k::softmax_rows(probs->data(), m, n);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] < 0) continue;
    if (static_cast<std::size_t>(targets[i]) >= n) throw ContractError("cross_entropy: target out of range");
    // log-sum-exp in the log domain to avoid log(0)
    const double* row = logits.data().data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double se = 0.0;
    for (std::size_t j = 0; j < n; ++j) se += std::exp(row[j] - mx);
    total += std::log(se) + mx - row[targets[i]];
    ++count;
  }
  if (count == 0) throw ContractError("cross_entropy: every target is ignored");
  Tensor out = Tensor::scalar(total / static_cast<double>(count));
  if (should_record({&logits})) {
    std::vector<int> ts(targets.begin(), targets.end());
    mark(out, [logits, out, probs, ts = std::move(ts), m, n, count]() mutable {
      const double g = out.grad()[0] / static_cast<double>(count);
      double* gz = logits.grad_buffer().data();
      for (std::size_t i = 0; i < m; ++i) {
        if (ts[i] < 0) continue;
        for (std::size_t j = 0; j < n; ++j) gz[i * n + j] += g * (*probs)[i * n + j];
        gz[i * n + static_cast<std::size_t>(ts[i])] -= g;
      }
    });
  }
  return out;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.numel() != target.numel()) {
    throw ShapeError("mse_loss: " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  }
  auto p = pred.data();
  auto t = target.data();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - t[i]) * (p[i] - t[i]);
  const double n = static_cast<double>(p.size());
  Tensor out = Tensor::scalar(total / n);
  if (should_record({&pred})) {
    mark(out, [pred, target, out, n]() mutable {
      const double g = out.grad()[0] * 2.0 / n;
      auto p = pred.data();
      auto t = target.data();
      auto gp = pred.grad_buffer();
      for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g * (p[i] - t[i]);
    });
  }
  return out;
}

}  // namespace mcqf
