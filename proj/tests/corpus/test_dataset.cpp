#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "mcqf/core/errors.hpp"
#include "mcqf/corpus/dataset.hpp"
#include "mcqf/corpus/simulator.hpp"

using namespace mcqf;
using namespace mcqf::corpus;

namespace {

Question make_question(const std::string& id, int n_choices, std::vector<std::string> correct) {
  Question q{id, "t", "Compute 1 + 1", {}, std::move(correct)};
  for (int i = 0; i < n_choices; ++i) q.choices.push_back({"c" + std::to_string(i), std::to_string(i)});
  return q;
}

Corpus toy_corpus(std::size_t n_questions, std::size_t n_users, std::size_t per_user) {
  std::vector<Question> qs;
  for (std::size_t i = 0; i < n_questions; ++i) qs.push_back(make_question("q" + std::to_string(i), 4, {"c0"}));
  std::vector<StudentRecord> students;
  for (std::size_t u = 0; u < n_users; ++u) {
    StudentRecord r{"u" + std::to_string(u), {}};
    for (std::size_t k = 0; k < per_user; ++k) {
      const std::string qid = "q" + std::to_string((u + k) % n_questions);
      r.interactions.push_back({r.user_id, "s", qid, {"c1"}, static_cast<Timestamp>(k * 10), false});
    }
    students.push_back(std::move(r));
  }
  return Corpus({}, std::move(qs), std::move(students));
}

std::set<std::string> question_ids(const std::vector<BinaryInstance>& v) {
  std::set<std::string> out;
  for (const auto& in : v) out.insert(in.question_id);
  return out;
}

}  // namespace

TEST(Decompose, CorrectAnswerTaskLabelsInChoiceOrder) {
  Corpus c({}, {make_question("q", 4, {"c0"})}, {});
  auto inst = decompose(c, Task::correct_answer);
  ASSERT_EQ(inst.size(), 4u);
  std::vector<int> labels;
  for (const auto& in : inst) {
    labels.push_back(in.label);
    EXPECT_FALSE(in.user_id.has_value());
  }
  EXPECT_EQ(labels, (std::vector<int>{1, 0, 0, 0}));
}

TEST(Decompose, MultiResponseGivesTwoPositives) {
  Corpus c({}, {make_question("q", 4, {"c0", "c2"})},
           {{"u", {{"u", "s", "q", {"c0", "c2"}, 100, true}}}});
  auto inst = decompose(c, Task::student_answer);
  ASSERT_EQ(inst.size(), 4u);
  int ones = 0;
  for (const auto& in : inst) {
    ones += in.label;
    EXPECT_EQ(*in.user_id, "u");
    EXPECT_EQ(in.history_cutoff, 100);
  }
  EXPECT_EQ(ones, 2);
}

TEST(Decompose, CountingOracleOnSimulatedCorpus) {
  SimulatorConfig cfg;
  cfg.n_students = 10;
  cfg.n_questions = 12;
  cfg.interactions_min = cfg.interactions_max = 5;
  auto sim = simulate_population(cfg);
  ASSERT_EQ(sim.corpus.interaction_count(), 50u);
  auto inst = decompose(sim.corpus, Task::student_answer);
  EXPECT_EQ(inst.size(), 200u);
  std::size_t selected = 0, labels = 0;
  for (const auto& s : sim.corpus.students())
    for (const auto& it : s.interactions) selected += it.selected_choice_ids.size();
  for (const auto& in : inst) labels += in.label;
  EXPECT_EQ(labels, selected);

  std::size_t correct = 0, label_sum = 0;
  for (const auto& q : sim.corpus.questions()) correct += q.correct_choice_ids.size();
  for (const auto& in : decompose(sim.corpus, Task::correct_answer)) label_sum += in.label;
  EXPECT_EQ(label_sum, correct);
}

TEST(Apportion, LargestRemainder) {
  EXPECT_EQ(apportion(10, {}), (std::array<std::size_t, 3>{8, 1, 1}));
  EXPECT_EQ(apportion(200, {}), (std::array<std::size_t, 3>{160, 20, 20}));
  // 11 * (.8, .1, .1) = (8.8, 1.1, 1.1): the single leftover goes to train.
  EXPECT_EQ(apportion(11, {}), (std::array<std::size_t, 3>{9, 1, 1}));
  // 15 -> (12, 1.5, 1.5): tie broken toward the earlier subset.
  EXPECT_EQ(apportion(15, {}), (std::array<std::size_t, 3>{12, 2, 1}));
  EXPECT_EQ(apportion(3, {}), (std::array<std::size_t, 3>{1, 1, 1}));
}

TEST(Split, QuestionExclusiveTenQuestions) {
  auto inst = decompose(toy_corpus(10, 0, 0), Task::correct_answer);
  auto s = split_question_exclusive(inst, {}, 1);
  EXPECT_EQ(question_ids(s.train).size(), 8u);
  EXPECT_EQ(question_ids(s.val).size(), 1u);
  EXPECT_EQ(question_ids(s.test).size(), 1u);
  EXPECT_EQ(s.policy, SplitPolicy::question_exclusive);
  auto again = split_question_exclusive(inst, {}, 1);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.test, s.test);
}

TEST(Split, QuestionExclusiveDisjointOverManySeeds) {
  auto inst = decompose(toy_corpus(37, 0, 0), Task::correct_answer);
  const auto sizes = apportion(37, {});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto s = split_question_exclusive(inst, {}, seed);
    auto a = question_ids(s.train), b = question_ids(s.val), c = question_ids(s.test);
    for (const auto& q : a) {
      EXPECT_FALSE(b.count(q));
      EXPECT_FALSE(c.count(q));
    }
    for (const auto& q : b) EXPECT_FALSE(c.count(q));
    EXPECT_EQ(a.size(), sizes[0]);
    EXPECT_EQ(b.size(), sizes[1]);
    EXPECT_EQ(c.size(), sizes[2]);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), inst.size());
  }
}

TEST(Split, QuestionExclusiveErrors) {
  auto inst = decompose(toy_corpus(2, 0, 0), Task::correct_answer);
  EXPECT_THROW(split_question_exclusive(inst, {}, 0), SplitError);
  auto student = decompose(toy_corpus(5, 3, 2), Task::student_answer);
  EXPECT_THROW(split_question_exclusive(student, {}, 0), ContractError);
}

TEST(Split, StudentTaskKeepsInteractionsWhole) {
  auto inst = decompose(toy_corpus(5, 2, 5), Task::student_answer);
  auto s = split_student_task(inst, {}, 4);
  EXPECT_EQ(s.train.size(), 8u * 4);
  EXPECT_EQ(s.val.size(), 4u);
  EXPECT_EQ(s.test.size(), 4u);
  std::map<std::size_t, int> where;
  auto mark = [&](const std::vector<BinaryInstance>& v, int id) {
    for (const auto& in : v) {
      auto [it, fresh] = where.emplace(in.group, id);
      if (!fresh) EXPECT_EQ(it->second, id) << "interaction " << in.group << " straddles subsets";
    }
  };
  mark(s.train, 0);
  mark(s.val, 1);
  mark(s.test, 2);
}

TEST(Split, StudentTaskQuestionsRecurAcrossSubsetsForSomeSeed) {
  // Two students answering the same question: search seeds for a split that
  // places that question in at least two subsets.
  auto inst = decompose(toy_corpus(3, 2, 3), Task::student_answer);
  bool found = false;
  for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
    auto s = split_student_task(inst, {}, seed);
    auto a = question_ids(s.train), b = question_ids(s.val), c = question_ids(s.test);
    for (const auto& q : a) found = found || b.count(q) || c.count(q);
    for (const auto& q : b) found = found || c.count(q);
  }
  EXPECT_TRUE(found);
}

TEST(Split, StudentTaskErrors) {
  auto inst = decompose(toy_corpus(3, 1, 2), Task::student_answer);
  EXPECT_THROW(split_student_task(inst, {}, 0), SplitError);
  auto qinst = decompose(toy_corpus(5, 0, 0), Task::correct_answer);
  EXPECT_THROW(split_student_task(qinst, {}, 0), ContractError);
}

TEST(Split, FullSplitRepeatsEverything) {
  auto inst = decompose(toy_corpus(4, 0, 0), Task::correct_answer);
  auto s = full_split(inst);
  EXPECT_EQ(s.train, inst);
  EXPECT_EQ(s.test, inst);
  EXPECT_EQ(s.policy, SplitPolicy::full);
}
