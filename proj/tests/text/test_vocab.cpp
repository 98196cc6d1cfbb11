#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "mcqf/core/errors.hpp"
#include "mcqf/text/vocab.hpp"

using namespace mcqf;
using namespace mcqf::text;

TEST(Tokenize, SplitsPunctuationAndKeepsReservedLiterals) {
  EXPECT_EQ(tokenize("Q: Compute 5 + 7 A: 12 CORRECT [SEP] next"),
            (std::vector<std::string>{"Q", ":", "Compute", "5", "+", "7", "A", ":", "12", "CORRECT", "[SEP]", "next"}));
  EXPECT_EQ(tokenize("  "), std::vector<std::string>{});
  EXPECT_EQ(tokenize("[x]"), (std::vector<std::string>{"[", "x", "]"}));
}

TEST(Vocab, BuildWithMinFreq) {
  Vocab v = Vocab::build({"a b", "a"}, 1);
  EXPECT_EQ(v.size(), kNumReserved + 2);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_TRUE(v.contains("b"));
  Vocab v2 = Vocab::build({"a b", "a"}, 2);
  EXPECT_EQ(v2.size(), kNumReserved + 1);
  EXPECT_TRUE(v2.contains("a"));
  EXPECT_FALSE(v2.contains("b"));
  EXPECT_EQ(v2.id("b"), kUnk);
}

TEST(Vocab, ReservedIdsAndDeterministicOrder) {
  Vocab v = Vocab::build({"b a c", "c b", "c"}, 1);
  EXPECT_EQ(v.token(kPad), "[PAD]");
  EXPECT_EQ(v.token(kCls), "[CLS]");
  EXPECT_EQ(v.token(kSep), "[SEP]");
  EXPECT_EQ(v.token(kMask), "[MASK]");
  EXPECT_EQ(v.token(kUnk), "[UNK]");
  // c:3, b:2, a:1
  EXPECT_EQ(v.id("c"), kNumReserved);
  EXPECT_EQ(v.id("b"), kNumReserved + 1);
  EXPECT_EQ(v.id("a"), kNumReserved + 2);
  // ties break lexicographically
  Vocab t = Vocab::build({"y x"}, 1);
  EXPECT_EQ(t.id("x"), kNumReserved);
}

TEST(Vocab, EmptyCorpusIsError) { EXPECT_THROW(Vocab::build({}, 1), ContractError); }

TEST(Vocab, SaveLoadRoundTrip) {
  Vocab v = Vocab::build({"Compute 5 + 7", "12", "grüße"}, 1);
  auto path = std::filesystem::temp_directory_path() / "mcqf_text_tests" / "vocab.txt";
  v.save(path);
  Vocab back = Vocab::load(path);
  EXPECT_EQ(back.tokens(), v.tokens());
  EXPECT_EQ(back.hash(), v.hash());
  EXPECT_NE(Vocab::build({"other"}, 1).hash(), v.hash());
}

TEST(EncodePair, EmptyTexts) {
  Vocab v = Vocab::build({"x"}, 1);
  auto s = encode_pair("", "", v, 6);
  EXPECT_EQ(s.ids, (std::vector<std::size_t>{kCls, kSep, kSep, kPad, kPad, kPad}));
  EXPECT_EQ(s.mask, (std::vector<std::uint8_t>{1, 1, 1, 0, 0, 0}));
}

TEST(EncodePair, HandTokenizedLayout) {
  Vocab v = Vocab::build({"Compute 5 + 7", "12"}, 1);
  auto s = encode_pair("Compute 5 + 7", "12", v, 10);
  const std::vector<std::size_t> want{kCls, v.id("Compute"), v.id("5"), v.id("+"), v.id("7"),
                                      kSep, v.id("12"),      kSep,      kPad,      kPad};
  EXPECT_EQ(s.ids, want);
  EXPECT_EQ(s.valid_length(), 8u);
  for (auto id : s.ids) EXPECT_NE(id, kUnk);
}

TEST(EncodePair, TruncatesQuestionFirst) {
  Vocab v = Vocab::build({"a b c d e f g", "x y"}, 1);
  auto s = encode_pair("a b c d e f g", "x y", v, 7);
  EXPECT_EQ(s.ids, (std::vector<std::size_t>{kCls, v.id("a"), v.id("b"), kSep, v.id("x"), v.id("y"), kSep}));
}

TEST(EncodePair, InjectiveOnDistinctPairs) {
  std::vector<std::string> texts;
  for (int a = 1; a <= 6; ++a) texts.push_back("Compute " + std::to_string(a) + " + 2");
  for (int c = 0; c < 12; ++c) texts.push_back(std::to_string(c));
  Vocab v = Vocab::build(texts, 1);
  std::set<std::vector<std::size_t>> seen;
  std::size_t pairs = 0;
  for (int a = 1; a <= 6; ++a)
    for (int c = 0; c < 12; ++c) {
      seen.insert(encode_pair("Compute " + std::to_string(a) + " + 2", std::to_string(c), v, 16).ids);
      ++pairs;
    }
  EXPECT_EQ(seen.size(), pairs);
}

TEST(EncodeCausal, KeepsMostRecentTokens) {
  Vocab v = Vocab::build({"a b c d"}, 1);
  auto s = encode_causal("a b c d", v, 3);
  EXPECT_EQ(s.ids, (std::vector<std::size_t>{kCls, v.id("c"), v.id("d")}));
  EXPECT_EQ(encode_causal("", v, 8).ids, std::vector<std::size_t>{kCls});
}
