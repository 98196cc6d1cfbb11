#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mcqf::corpus {

using Timestamp = std::int64_t;  // epoch milliseconds

struct Topic {
  std::string id;
  std::string name;
  std::optional<std::string> parent_id;

  bool operator==(const Topic&) const = default;
};

struct AnswerChoice {
  std::string id;
  std::string text;

  bool operator==(const AnswerChoice&) const = default;
};

struct Question {
  std::string id;
  std::string topic_id;
  std::string text;
  std::vector<AnswerChoice> choices;
  /// Sorted, duplicate-free.
  std::vector<std::string> correct_choice_ids;

  bool has_choice(const std::string& choice_id) const;
  bool is_correct_choice(const std::string& choice_id) const;
  const AnswerChoice& choice(const std::string& choice_id) const;

  bool operator==(const Question&) const = default;
};

struct Interaction {
  std::string user_id;
  std::string session_id;
  std::string question_id;
  /// Sorted, duplicate-free, non-empty.
  std::vector<std::string> selected_choice_ids;
  Timestamp timestamp = 0;
  bool is_correct = false;

  bool operator==(const Interaction&) const = default;
};

struct StudentRecord {
  std::string user_id;
  std::vector<Interaction> interactions;  // chronological

  bool operator==(const StudentRecord&) const = default;
};

/// Throws ContractError when a question breaks its invariants.
void validate_question(const Question& q);

/// Sorts and deduplicates a choice-id set in place.
void normalize_ids(std::vector<std::string>& ids);

/// Validated, immutable question bank plus student histories. Construction
/// checks question invariants, topic acyclicity and referential integrity.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Topic> topics, std::vector<Question> questions, std::vector<StudentRecord> students);

  const std::vector<Topic>& topics() const { return topics_; }
  const std::vector<Question>& questions() const { return questions_; }
  const std::vector<StudentRecord>& students() const { return students_; }

  bool has_question(const std::string& id) const { return question_index_.count(id) != 0; }
  /// Throws ReferentialError for unknown ids.
  const Question& question(const std::string& id) const;
  std::size_t question_position(const std::string& id) const;

  std::size_t interaction_count() const;

  bool operator==(const Corpus& other) const {
    return topics_ == other.topics_ && questions_ == other.questions_ && students_ == other.students_;
  }

 private:
  std::vector<Topic> topics_;
  std::vector<Question> questions_;
  std::vector<StudentRecord> students_;
  std::unordered_map<std::string, std::size_t> question_index_;
};

/// Keeps only the first attempt of every (user, question) pair.
std::vector<StudentRecord> drop_repeat_trials(const std::vector<StudentRecord>& students);

}  // namespace mcqf::corpus
