#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcqf/corpus/types.hpp"

namespace mcqf::corpus {

enum class Task { correct_answer, student_answer };

/// One (question, choice) classification unit.
struct BinaryInstance {
  std::optional<std::string> user_id;
  std::string question_id;
  std::string choice_id;
  std::string question_text;
  std::string choice_text;
  int label = 0;
  /// Timestamp of the source interaction; history strictly before it is
  /// visible. Zero for the correct-answer task.
  Timestamp history_cutoff = 0;
  /// Unit kept together by splits: question index for the correct-answer
  /// task, global interaction index for the student-answer task.
  std::size_t group = 0;

  bool operator==(const BinaryInstance&) const = default;
};

/// correct_answer: one instance per (question, choice), label = choice is
/// correct. student_answer: one instance per (interaction, choice), label =
/// choice was selected. Choice order follows the question.
std::vector<BinaryInstance> decompose(const Corpus& corpus, Task task);

enum class SplitPolicy { question_exclusive, student_task, full };

const char* to_string(SplitPolicy p);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  SplitPolicy policy = SplitPolicy::full;
  std::vector<BinaryInstance> train;
  std::vector<BinaryInstance> val;
  std::vector<BinaryInstance> test;
};

/// Largest-remainder apportionment of n units; remainder ties favour the
/// earlier subset. When n >= 3 every subset with a positive ratio receives
/// at least one unit, taken from the largest subset.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& ratios);

/// Partition by question id. Throws SplitError for fewer than 3 questions and
/// ContractError for student-answer instances.
DatasetSplit split_question_exclusive(const std::vector<BinaryInstance>& instances, const SplitRatios& ratios,
                                      std::uint64_t seed);

/// Partition by interaction. Throws SplitError for fewer than 3 interactions
/// and ContractError for correct-answer instances.
DatasetSplit split_student_task(const std::vector<BinaryInstance>& instances, const SplitRatios& ratios,
                                std::uint64_t seed);

/// Retention setting: train, val and test all hold the full set.
DatasetSplit full_split(const std::vector<BinaryInstance>& instances);

}  // namespace mcqf::corpus
