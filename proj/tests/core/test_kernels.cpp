#include <gtest/gtest.h>

#include <vector>

#include "mcqf/core/kernels.hpp"
#include "mcqf/core/random.hpp"

using namespace mcqf;
namespace par = mcqf::kernels::parallel;
namespace ref = mcqf::kernels::reference;

namespace {

std::vector<double> randv(std::size_t n, Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
}

}  // namespace

TEST(Kernels, MatmulVariantsAgreeWithReference) {
  Rng rng(1);
  for (auto [m, k, n] : std::vector<std::array<std::size_t, 3>>{{1, 1, 1}, {7, 5, 3}, {64, 64, 256}, {33, 17, 65}}) {
    auto a = randv(m * k, rng), b = randv(k * n, rng);
    std::vector<double> c1(m * n), c2(m * n);
    par::matmul_nn(a.data(), b.data(), c1.data(), m, k, n, false);
    ref::matmul_nn(a.data(), b.data(), c2.data(), m, k, n, false);
    expect_close(c1, c2, 1e-12);

    auto g = randv(m * n, rng);
    std::vector<double> d1(m * k, 1.0), d2(m * k, 1.0);
    par::matmul_nt(g.data(), b.data(), d1.data(), m, n, k, true);
    ref::matmul_nt(g.data(), b.data(), d2.data(), m, n, k, true);
    expect_close(d1, d2, 1e-12);

    std::vector<double> e1(k * n), e2(k * n);
    par::matmul_tn(a.data(), g.data(), e1.data(), m, k, n, false);
    ref::matmul_tn(a.data(), g.data(), e2.data(), m, k, n, false);
    expect_close(e1, e2, 1e-12);
  }
}

TEST(Kernels, AttentionAgreesWithReference) {
  Rng rng(2);
  for (bool causal : {false, true}) {
    kernels::AttentionDims d{3, 6, 2, 4, causal};
    const std::size_t n = d.batch * d.seq * d.width();
    auto q = randv(n, rng), k = randv(n, rng), v = randv(n, rng), dout = randv(n, rng);
    std::vector<std::size_t> valid{6, 3, 0};
    std::vector<double> o1(n), o2(n), p1(d.probs_size()), p2(d.probs_size());
    par::attention_forward(d, q.data(), k.data(), v.data(), valid.data(), o1.data(), p1.data());
    ref::attention_forward(d, q.data(), k.data(), v.data(), valid.data(), o2.data(), p2.data());
    expect_close(o1, o2, 1e-12);
    expect_close(p1, p2, 1e-12);

    std::vector<double> dq1(n), dk1(n), dv1(n), dq2(n), dk2(n), dv2(n);
    par::attention_backward(d, q.data(), k.data(), v.data(), valid.data(), p1.data(), dout.data(), dq1.data(),
                            dk1.data(), dv1.data());
    ref::attention_backward(d, q.data(), k.data(), v.data(), valid.data(), p2.data(), dout.data(), dq2.data(),
                            dk2.data(), dv2.data());
    expect_close(dq1, dq2, 1e-12);
    expect_close(dk1, dk2, 1e-12);
    expect_close(dv1, dv2, 1e-12);
  }
}

TEST(Kernels, LayerNormAgreesWithReference) {
  Rng rng(3);
  const std::size_t rows = 9, n = 16;
  auto x = randv(rows * n, rng), g = randv(n, rng), b = randv(n, rng), dy = randv(rows * n, rng);
  std::vector<double> y1(rows * n), y2(rows * n), m1(rows), m2(rows), r1(rows), r2(rows);
  par::layer_norm_forward(x.data(), g.data(), b.data(), y1.data(), m1.data(), r1.data(), rows, n, 1e-5);
  ref::layer_norm_forward(x.data(), g.data(), b.data(), y2.data(), m2.data(), r2.data(), rows, n, 1e-5);
  expect_close(y1, y2, 1e-12);
  std::vector<double> dx1(rows * n), dx2(rows * n), dg1(n), dg2(n), db1(n), db2(n);
  par::layer_norm_backward(x.data(), g.data(), m1.data(), r1.data(), dy.data(), dx1.data(), dg1.data(), db1.data(),
                           rows, n);
  ref::layer_norm_backward(x.data(), g.data(), m2.data(), r2.data(), dy.data(), dx2.data(), dg2.data(), db2.data(),
                           rows, n);
  expect_close(dx1, dx2, 1e-12);
  expect_close(dg1, dg2, 1e-12);
  expect_close(db1, db2, 1e-12);
}

TEST(Kernels, SoftmaxRowsAgree) {
  Rng rng(4);
  auto x = randv(40, rng);
  auto y = x;
  par::softmax_rows(x.data(), 5, 8);
  ref::softmax_rows(y.data(), 5, 8);
  expect_close(x, y, 1e-15);
}
