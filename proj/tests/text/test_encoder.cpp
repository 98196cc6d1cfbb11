#include <gtest/gtest.h>

#include "mcqf/core/errors.hpp"
#include "mcqf/text/pretrain.hpp"

using namespace mcqf;
using namespace mcqf::text;

namespace {

EncoderConfig small_config(std::size_t vocab) {
  EncoderConfig c;
  c.vocab_size = vocab;
  c.hidden = 16;
  c.layers = 2;
  c.heads = 2;
  c.ffn = 32;
  c.max_positions = 32;
  return c;
}

TokenSequence seq_of(std::vector<std::size_t> ids) {
  TokenSequence s;
  s.mask.assign(ids.size(), 1);
  s.ids = std::move(ids);
  return s;
}

std::vector<double> row(const Tensor& t, std::size_t r) {
  auto d = t.data().subspan(r * t.cols(), t.cols());
  return {d.begin(), d.end()};
}

std::vector<std::string> toy_sentences(std::size_t n) {
  const std::vector<std::string> subj{"the cat", "a dog", "my bird", "the fish"};
  const std::vector<std::string> verb{"eats", "sees", "likes", "chases"};
  const std::vector<std::string> obj{"food", "the ball", "a stick", "water", "the sun"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(subj[i % 4] + " " + verb[(i / 4) % 4] + " " + obj[i % 5]);
  return out;
}

}  // namespace

TEST(Encoder, OutputShapeAndDeterminism) {
  MaskedLm m(small_config(20), 1);
  auto b = TokenBatch::pack(std::vector<TokenSequence>{seq_of({kCls, 7, 8, 9, kSep})});
  Tensor a = m.encoder.forward(b);
  EXPECT_EQ(a.shape(), (Shape{5, 16}));
  EXPECT_EQ(a.storage(), m.encoder.forward(b).storage());
  MaskedLm same(small_config(20), 1);
  EXPECT_EQ(same.encoder.forward(b).storage(), a.storage());
}

TEST(Encoder, PaddingDoesNotChangeValidRows) {
  MaskedLm m(small_config(20), 2);
  auto short_seq = seq_of({kCls, 7, 8, kSep});
  auto long_seq = seq_of({kCls, 9, 10, 11, 12, 13, kSep});
  auto alone = m.encoder.forward(TokenBatch::pack(std::vector<TokenSequence>{short_seq}));
  auto padded = m.encoder.forward(TokenBatch::pack(std::vector<TokenSequence>{short_seq, long_seq}));
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(row(alone, r), row(padded, r));
}

TEST(Encoder, OutOfRangeIdIsContractError) {
  MaskedLm m(small_config(20), 3);
  auto b = TokenBatch::pack(std::vector<TokenSequence>{seq_of({kCls, 25, kSep})});
  EXPECT_THROW(m.encoder.forward(b), ContractError);
}

TEST(Encoder, TokenOrderChangesClsState) {
  MaskedLm m(small_config(30), 4);
  Rng rng(5);
  int changed = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> ids{kCls};
    for (int i = 0; i < 5; ++i) ids.push_back(std::uniform_int_distribution<std::size_t>(kNumReserved, 29)(rng));
    std::vector<std::size_t> shuffled = ids;
    std::reverse(shuffled.begin() + 1, shuffled.end());
    if (shuffled == ids) continue;
    auto a = m.encoder.forward(TokenBatch::pack(std::vector<TokenSequence>{seq_of(ids)}));
    auto b = m.encoder.forward(TokenBatch::pack(std::vector<TokenSequence>{seq_of(shuffled)}));
    changed += row(a, 0) != row(b, 0);
  }
  EXPECT_GE(changed, 19);
}

TEST(Encoder, InvalidConfigIsConfigError) {
  auto c = small_config(20);
  c.heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Mlm, MaskProbMustBeOpenUnitInterval) {
  auto texts = toy_sentences(10);
  Vocab v = Vocab::build(texts);
  MaskedLm m(small_config(v.size()), 1);
  PretrainConfig cfg;
  cfg.mask_prob = 0.0;
  EXPECT_THROW(mlm_pretrain(m, v, texts, cfg), ConfigError);
  cfg.mask_prob = 1.0;
  EXPECT_THROW(mlm_pretrain(m, v, texts, cfg), ConfigError);
}

TEST(Mlm, MaskingSelectsOnlyContentTokens) {
  Rng rng(3);
  auto s = seq_of({kCls, 7, 8, 9, kSep});
  s.ids.push_back(kPad);
  s.mask.push_back(0);
  for (int i = 0; i < 50; ++i) {
    auto ex = mask_tokens(s, 20, 0.5, rng);
    EXPECT_EQ(ex.targets[0], -1);
    EXPECT_EQ(ex.targets[4], -1);
    EXPECT_EQ(ex.targets[5], -1);
    int n = 0;
    for (int p = 1; p <= 3; ++p) n += ex.targets[p] >= 0;
    EXPECT_GE(n, 1);
  }
}

TEST(Mlm, LossDecreasesOnToyCorpus) {
  auto texts = toy_sentences(200);
  Vocab v = Vocab::build(texts);
  MaskedLm m(small_config(v.size()), 7);
  PretrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 16;
  auto report = mlm_pretrain(m, v, texts, cfg);
  ASSERT_EQ(report.loss_curve.size(), 11u);
  EXPECT_LT(report.loss_curve.back(), report.loss_curve.front());
}

TEST(Mlm, RepetitiveCorpusIsLearnedAlmostPerfectly) {
  std::vector<std::string> texts(64, "alpha beta gamma delta epsilon");
  Vocab v = Vocab::build(texts);
  MaskedLm m(small_config(v.size()), 9);
  PretrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 16;
  cfg.lr = 3e-3;
  mlm_pretrain(m, v, texts, cfg);
  EXPECT_GE(masked_accuracy(m, v, texts, cfg, 99), 0.95);
}

TEST(Clm, LossDecreasesAndIsDeterministic) {
  auto texts = toy_sentences(100);
  Vocab v = Vocab::build(texts);
  PretrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 16;
  CausalLm a(small_config(v.size()), 3), b(small_config(v.size()), 3);
  auto ra = clm_pretrain(a, v, texts, cfg);
  auto rb = clm_pretrain(b, v, texts, cfg);
  EXPECT_LT(ra.loss_curve.back(), ra.loss_curve.front());
  EXPECT_EQ(ra.loss_curve, rb.loss_curve);
}

TEST(Clm, HiddenStatesIgnoreFutureTokens) {
  CausalLm m(small_config(30), 4);
  std::vector<std::size_t> ids{kCls, 10, 11, 12, 13, 14};
  auto base = m.layers(TokenBatch::pack(std::vector<TokenSequence>{seq_of(ids)}));
  for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
    auto changed = ids;
    for (std::size_t f = t + 1; f < ids.size(); ++f) changed[f] = 20 + f;
    auto other = m.layers(TokenBatch::pack(std::vector<TokenSequence>{seq_of(changed)}));
    for (std::size_t l = 0; l < base.size(); ++l)
      for (std::size_t r = 0; r <= t; ++r) EXPECT_EQ(row(base[l], r), row(other[l], r)) << "layer " << l;
  }
}
