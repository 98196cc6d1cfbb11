#include "mcqf/corpus/types.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_set>

#include "mcqf/core/errors.hpp"

namespace mcqf::corpus {

void normalize_ids(std::vector<std::string>& ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
}

bool Question::has_choice(const std::string& choice_id) const {
  return std::any_of(choices.begin(), choices.end(), [&](const AnswerChoice& c) { return c.id == choice_id; });
}

bool Question::is_correct_choice(const std::string& choice_id) const {
  return std::binary_search(correct_choice_ids.begin(), correct_choice_ids.end(), choice_id);
}

const AnswerChoice& Question::choice(const std::string& choice_id) const {
  for (const auto& c : choices)
    if (c.id == choice_id) return c;
  throw ReferentialError("question '" + id + "' has no choice '" + choice_id + "'");
}

void validate_question(const Question& q) {
  if (q.id.empty()) throw ContractError("question with empty id");
  if (q.choices.size() < 2) throw ContractError("question '" + q.id + "' has fewer than 2 choices");
  std::set<std::string> seen;
  for (const auto& c : q.choices) {
    if (c.text.empty()) throw ContractError("question '" + q.id + "' choice '" + c.id + "' has empty text");
    if (!seen.insert(c.id).second) throw ContractError("question '" + q.id + "' repeats choice id '" + c.id + "'");
  }
  if (q.correct_choice_ids.empty()) throw ContractError("question '" + q.id + "' has no correct choice");
  if (!std::is_sorted(q.correct_choice_ids.begin(), q.correct_choice_ids.end()) ||
      std::adjacent_find(q.correct_choice_ids.begin(), q.correct_choice_ids.end()) != q.correct_choice_ids.end()) {
    throw ContractError("question '" + q.id + "' correct_choice_ids must be sorted and unique");
  }
  for (const auto& id : q.correct_choice_ids) {
    if (!seen.count(id)) throw ReferentialError("question '" + q.id + "' marks unknown choice '" + id + "' correct");
  }
}

Corpus::Corpus(std::vector<Topic> topics, std::vector<Question> questions, std::vector<StudentRecord> students)
    : topics_(std::move(topics)), questions_(std::move(questions)), students_(std::move(students)) {
  std::unordered_map<std::string, const Topic*> topic_by_id;
  for (const auto& t : topics_) {
    if (!topic_by_id.emplace(t.id, &t).second) throw ContractError("duplicate topic id '" + t.id + "'");
  }
  for (const auto& t : topics_) {
    // Walk up the parent chain; revisiting a node means a cycle.
    std::unordered_set<std::string> chain{t.id};
    const Topic* cur = &t;
    while (cur->parent_id) {
      auto it = topic_by_id.find(*cur->parent_id);
      if (it == topic_by_id.end()) {
        throw ReferentialError("topic '" + cur->id + "' has unknown parent '" + *cur->parent_id + "'");
      }
      cur = it->second;
      if (!chain.insert(cur->id).second) throw ContractError("topic hierarchy has a cycle through '" + t.id + "'");
    }
  }

  for (std::size_t i = 0; i < questions_.size(); ++i) {
    const auto& q = questions_[i];
    validate_question(q);
    if (!topic_by_id.empty() && !topic_by_id.count(q.topic_id)) {
      throw ReferentialError("question '" + q.id + "' references unknown topic '" + q.topic_id + "'");
    }
    if (!question_index_.emplace(q.id, i).second) throw ContractError("duplicate question id '" + q.id + "'");
  }

  std::unordered_set<std::string> users;
  for (const auto& s : students_) {
    if (!users.insert(s.user_id).second) throw ContractError("duplicate student record '" + s.user_id + "'");
    Timestamp prev = std::numeric_limits<Timestamp>::min();
    for (const auto& it : s.interactions) {
      if (it.user_id != s.user_id) {
        throw ContractError("record '" + s.user_id + "' holds an interaction of user '" + it.user_id + "'");
      }
      if (it.timestamp < prev) throw ContractError("record '" + s.user_id + "' is not chronological");
      prev = it.timestamp;
      const Question& q = question(it.question_id);
      if (it.selected_choice_ids.empty()) {
        throw ContractError("interaction of '" + s.user_id + "' on '" + q.id + "' selects nothing");
      }
      for (const auto& c : it.selected_choice_ids) {
        if (!q.has_choice(c)) {
          throw ReferentialError("interaction of '" + s.user_id + "' selects unknown choice '" + c +
                                 "' of question '" + q.id + "'");
        }
      }
      if (it.is_correct != (it.selected_choice_ids == q.correct_choice_ids)) {
        throw ContractError("interaction of '" + s.user_id + "' on '" + q.id + "' has inconsistent is_correct");
      }
    }
  }
}

const Question& Corpus::question(const std::string& id) const {
  return questions_[question_position(id)];
}

std::size_t Corpus::question_position(const std::string& id) const {
  auto it = question_index_.find(id);
  if (it == question_index_.end()) throw ReferentialError("unknown question id '" + id + "'");
  return it->second;
}

std::size_t Corpus::interaction_count() const {
  std::size_t n = 0;
  for (const auto& s : students_) n += s.interactions.size();
  return n;
}

std::vector<StudentRecord> drop_repeat_trials(const std::vector<StudentRecord>& students) {
  std::vector<StudentRecord> out;
  out.reserve(students.size());
  for (const auto& s : students) {
    StudentRecord r{s.user_id, {}};
    std::unordered_set<std::string> seen;
    for (const auto& it : s.interactions)
      if (seen.insert(it.question_id).second) r.interactions.push_back(it);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mcqf::corpus
