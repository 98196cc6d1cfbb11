#include <gtest/gtest.h>

#include "mcqf/core/nn.hpp"
#include "support/gradcheck.hpp"

using namespace mcqf;
using mcqf::testing::gradcheck;

namespace {

constexpr double kTol = 1e-4;
constexpr int kInstances = 20;

Tensor randn(Shape s, Rng& rng, double sd = 1.0) {
  Tensor t(std::move(s));
  fill_normal(t, 0.0, sd, rng);
  return t;
}

// Random projection of y to a scalar so every output element matters.
Tensor probe(const Tensor& y, const Tensor& w) { return sum(mul(y, w)); }

std::vector<Tensor> params_of(ParamStore& ps) {
  std::vector<Tensor> out;
  for (auto& [_, t] : ps.entries()) out.push_back(t);
  return out;
}

}  // namespace

TEST(GradCheck, Linear) {
  for (int inst = 0; inst < kInstances; ++inst) {
    Rng rng(100 + inst);
    ParamStore ps;
    Linear lin(ps, "lin", 4, 3, true, rng, {0.5});
    Tensor x = randn({5, 4}, rng);
    Tensor w = randn({5, 3}, rng);
    auto ps_list = params_of(ps);
    ps_list.push_back(x);
    auto r = gradcheck([&] { return probe(lin.forward(x), w); }, ps_list);
    EXPECT_LT(r.max_rel_error, kTol) << "instance " << inst;
  }
}

TEST(GradCheck, EmbeddingLookupWithRepeatedIds) {
  for (int inst = 0; inst < kInstances; ++inst) {
    Rng rng(200 + inst);
    Tensor table = randn({6, 4}, rng);
    std::vector<std::size_t> ids{1, 3, 1, 5, 0, 1};
    Tensor w = randn({6, 4}, rng);
    auto r = gradcheck([&] { return probe(gather_rows(table, ids), w); }, {table});
    EXPECT_LT(r.max_rel_error, kTol);
  }
}

TEST(GradCheck, LayerNorm) {
  for (int inst = 0; inst < kInstances; ++inst) {
    Rng rng(300 + inst);
    ParamStore ps;
    LayerNorm ln(ps, "ln", 6);
    fill_normal(ln.gamma, 1.0, 0.3, rng);
    fill_normal(ln.beta, 0.0, 0.3, rng);
    Tensor x = randn({4, 6}, rng, 2.0);
    Tensor w = randn({4, 6}, rng);
    auto list = params_of(ps);
    list.push_back(x);
    auto r = gradcheck([&] { return probe(ln.forward(x), w); }, list);
    EXPECT_LT(r.max_rel_error, kTol);
  }
}

TEST(GradCheck, Activations) {
  for (int inst = 0; inst < kInstances; ++inst) {
    Rng rng(400 + inst);
    Tensor x = randn({3, 5}, rng, 2.0);
    Tensor w = randn({3, 5}, rng);
    EXPECT_LT(gradcheck([&] { return probe(relu(x), w); }, {x}).max_rel_error, kTol);
    EXPECT_LT(gradcheck([&] { return probe(gelu(x), w); }, {x}).max_rel_error, kTol);
    EXPECT_LT(gradcheck([&] { return probe(tanh(x), w); }, {x}).max_rel_error, kTol);
    EXPECT_LT(gradcheck([&] { return probe(sigmoid(x), w); }, {x}).max_rel_error, kTol);
    EXPECT_LT(gradcheck([&] { return probe(softmax(x, -1), w); }, {x}).max_rel_error, kTol);
    EXPECT_LT(gradcheck([&] { return probe(softmax(x, 0), w); }, {x}).max_rel_error, kTol);
  }
}

TEST(GradCheck, FeedForward) {
  for (int inst = 0; inst < kInstances; ++inst) {
    Rng rng(500 + inst);
    ParamStore ps;
    FeedForward ffn(ps, "ffn", 4, 8, rng);
    for (auto& t : params_of(ps)) {
      Tensor h = t;
      fill_normal(h, 0.0, 0.5, rng);
    }
    Tensor x = randn({3, 4}, rng);
    Tensor w = randn({3, 4}, rng);
    auto list = params_of(ps);
    list.push_back(x);
    EXPECT_LT(gradcheck([&] { return probe(ffn.forward(x), w); }, list).max_rel_error, kTol);
  }
}

TEST(GradCheck, MultiHeadAttentionBidirectionalAndCausal) {
  for (int inst = 0; inst < kInstances; ++inst) {
    for (bool causal : {false, true}) {
      Rng rng(600 + inst);
      ParamStore ps;
      MultiHeadAttention mha(ps, "attn", 8, 2, rng);
      for (auto& t : params_of(ps)) {
        Tensor h = t;
        fill_normal(h, 0.0, 0.4, rng);
      }
      // Two sequences packed at length 4, the second padded after 2 tokens.
      Tensor x = randn({8, 8}, rng);
      Tensor w = randn({8, 8}, rng);
      std::vector<std::size_t> valid{4, 2};
      AttentionShape shape{2, 4, 2, causal};
      auto list = params_of(ps);
      list.push_back(x);
      auto r = gradcheck([&] { return probe(mha.forward(x, shape, valid), w); }, list);
      EXPECT_LT(r.max_rel_error, kTol) << (causal ? "causal" : "bidirectional") << " instance " << inst;
    }
  }
}

TEST(GradCheck, TransformerBlock) {
  for (int inst = 0; inst < kInstances; ++inst) {
    Rng rng(700 + inst);
    ParamStore ps;
    TransformerBlock block(ps, "blk", 8, 2, 12, rng);
    Tensor x = randn({6, 8}, rng);
    Tensor w = randn({6, 8}, rng);
    std::vector<std::size_t> valid{3, 3};
    AttentionShape shape{2, 3, 2, false};
    auto list = params_of(ps);
    list.push_back(x);
    auto r = gradcheck([&] { return probe(block.forward(x, shape, valid, 0.0, nullptr), w); }, list, 1e-5, 40);
    EXPECT_LT(r.max_rel_error, kTol);
  }
}

TEST(GradCheck, Lstm) {
  for (int inst = 0; inst < kInstances; ++inst) {
    Rng rng(800 + inst);
    ParamStore ps;
    Lstm lstm(ps, "lstm", 3, 4, 2, rng);
    std::vector<Tensor> steps;
    for (int t = 0; t < 4; ++t) steps.push_back(randn({2, 3}, rng));
    Tensor w = randn({2, 4}, rng);
    auto list = params_of(ps);
    list.push_back(steps[0]);
    auto r = gradcheck([&] { return probe(lstm.forward(steps).back(), w); }, list, 1e-5, 30);
    EXPECT_LT(r.max_rel_error, kTol);
  }
}

TEST(GradCheck, LossesAndShapeOps) {
  for (int inst = 0; inst < kInstances; ++inst) {
    Rng rng(900 + inst);
    Tensor z = randn({6, 1}, rng, 2.0);
    std::vector<double> y{1, 0, 0, 1, 0, 1};
    EXPECT_LT(gradcheck([&] { return bce_with_logits(z, y, 2.5); }, {z}).max_rel_error, kTol);

    Tensor logits = randn({4, 5}, rng);
    std::vector<int> t{2, -1, 0, 4};
    EXPECT_LT(gradcheck([&] { return cross_entropy(logits, t); }, {logits}).max_rel_error, kTol);

    Tensor a = randn({3, 4}, rng);
    Tensor b = randn({3, 2}, rng);
    Tensor target = randn({3, 6}, rng);
    EXPECT_LT(gradcheck([&] { return mse_loss(concat_cols(a, b), target); }, {a, b}).max_rel_error, kTol);

    Tensor w = randn({1, 2}, rng);
    EXPECT_LT(gradcheck([&] { return probe(mean_rows(slice_cols(a, 1, 3), 0, 2), w); }, {a}).max_rel_error, kTol);
  }
}
