#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mcqf/core/errors.hpp"
#include "mcqf/eval/metrics.hpp"

using namespace mcqf;
using namespace mcqf::eval;

namespace {

// Independent long-double oracle working from the label vectors directly.
struct Oracle {
  long double mcc, f1_pos, f1_neg, acc;
};

Oracle oracle(const std::vector<int>& y, const std::vector<int>& p) {
  long double tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    tp += y[i] && p[i];
    tn += !y[i] && !p[i];
    fp += !y[i] && p[i];
    fn += y[i] && !p[i];
  }
  const long double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  Oracle o{};
  o.mcc = den == 0 ? 0.0L : (tp * tn - fp * fn) / std::sqrt(den);
  o.f1_pos = (2 * tp + fp + fn) == 0 ? 0.0L : 2 * tp / (2 * tp + fp + fn);
  o.f1_neg = (2 * tn + fp + fn) == 0 ? 0.0L : 2 * tn / (2 * tn + fp + fn);
  o.acc = (tp + tn) / y.size();
  return o;
}

}  // namespace

TEST(Metrics, MatchOracleOnRandomTables) {
  std::mt19937_64 gen(2024);
  for (int table = 0; table < 1000; ++table) {
    const std::size_t n = 1 + gen() % 400;
    const double pos_rate = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    const double agree = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = std::bernoulli_distribution(pos_rate)(gen);
      p[i] = std::bernoulli_distribution(agree)(gen) ? y[i] : 1 - y[i];
    }
    const auto m = metrics(confusion(y, p));
    const auto o = oracle(y, p);
    EXPECT_NEAR(m.mcc, static_cast<double>(o.mcc), 1e-12) << table;
    EXPECT_NEAR(m.f1_class1, static_cast<double>(o.f1_pos), 1e-12) << table;
    EXPECT_NEAR(m.f1_class0, static_cast<double>(o.f1_neg), 1e-12) << table;
    EXPECT_NEAR(m.f1_macro, static_cast<double>((o.f1_pos + o.f1_neg) / 2), 1e-12) << table;
    EXPECT_NEAR(m.accuracy, static_cast<double>(o.acc), 1e-12) << table;
  }
}

TEST(Metrics, HandComputedTable) {
  const ConfusionCounts c{3, 1, 4, 2};  // tp fp tn fn
  EXPECT_NEAR(mcc(c), (12.0 - 2.0) / std::sqrt(4.0 * 5.0 * 5.0 * 6.0), 1e-15);
  EXPECT_DOUBLE_EQ(f1(c), 6.0 / 9.0);
  EXPECT_DOUBLE_EQ(f1(c.swapped()), 8.0 / 11.0);
  EXPECT_DOUBLE_EQ(f1_macro(c), 0.5 * (6.0 / 9.0 + 8.0 / 11.0));
  EXPECT_DOUBLE_EQ(accuracy(c), 0.7);
}

TEST(Metrics, Properties) {
  std::mt19937_64 gen(9);
  for (int i = 0; i < 200; ++i) {
    ConfusionCounts c{gen() % 50, gen() % 50, gen() % 50, gen() % 50};
    if (c.total() == 0) continue;
    const double m = mcc(c);
    EXPECT_LE(std::abs(m), 1.0 + 1e-15);
    // Relabelling both classes leaves MCC, macro-F1 and accuracy unchanged.
    EXPECT_NEAR(mcc(c.swapped()), m, 1e-15);
    EXPECT_NEAR(f1_macro(c.swapped()), f1_macro(c), 1e-15);
    // Inverting the predictions negates MCC.
    const ConfusionCounts inv{c.fn, c.tn, c.fp, c.tp};
    EXPECT_NEAR(mcc(inv), -m, 1e-15);
  }
  EXPECT_EQ(mcc({5, 0, 7, 0}), 1.0);
  EXPECT_EQ(mcc({0, 5, 0, 7}), -1.0);
}

TEST(Metrics, DegenerateTables) {
  EXPECT_EQ(mcc({0, 0, 10, 0}), 0.0);
  EXPECT_EQ(mcc({4, 6, 0, 0}), 0.0);
  EXPECT_EQ(f1({0, 0, 10, 0}), 0.0);
  EXPECT_THROW(accuracy({}), ContractError);
  EXPECT_THROW(metrics({}), ContractError);
  const std::vector<int> y{1, 0}, p{1};
  EXPECT_THROW(confusion(y, p), ContractError);
  const std::vector<int> bad{2, 0};
  EXPECT_THROW(confusion(bad, y), ContractError);
}

TEST(Metrics, DummyBaselineHasZeroMcc) {
  std::mt19937_64 gen(77);
  for (int ds = 0; ds < 50; ++ds) {
    const double rate = std::uniform_real_distribution<double>(0.05, 0.95)(gen);
    std::vector<int> train(50 + gen() % 500), test(20 + gen() % 200);
    for (auto& v : train) v = std::bernoulli_distribution(rate)(gen);
    for (auto& v : test) v = std::bernoulli_distribution(rate)(gen);
    const auto m = dummy_baseline(train, test);
    EXPECT_EQ(m.mcc, 0.0) << ds;
  }
}

TEST(Metrics, MajorityLabelAndThreshold) {
  EXPECT_EQ(majority_label(std::vector<int>{1, 1, 0}), 1);
  EXPECT_EQ(majority_label(std::vector<int>{1, 0}), 0);
  EXPECT_EQ(majority_label(std::vector<int>{}), 0);
  EXPECT_EQ(predict_label(0.5), 1);
  EXPECT_EQ(predict_label(std::nextafter(0.5, 0.0)), 0);
  EXPECT_THROW(dummy_baseline(std::vector<int>{1}, std::vector<int>{}), ContractError);
}
