#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mcqf/corpus/types.hpp"

namespace mcqf::corpus {

/// Systematic-error rules that generate distractors, in the order they are
/// preferred when filling a question's choice list.
///   plus_one     a + b + 1
///   subtract     |a - b|
///   concat       the digits of a followed by the digits of b
///   minus_one    a + b - 1
///   digit_swap   the digits of a + b reversed
inline const std::vector<std::string>& distractor_rules() {
  static const std::vector<std::string> rules{"plus_one", "subtract", "concat", "minus_one", "digit_swap"};
  return rules;
}

/// A student archetype: a mixture over behaviours ("correct" or a rule name)
/// and the share of students drawn from it.
struct MisconceptionProfile {
  std::string name;
  double weight = 1.0;
  std::map<std::string, double> behaviour;
};

struct SimulatorConfig {
  std::size_t n_students = 2000;
  std::size_t n_questions = 200;
  std::size_t choices_per_question = 4;
  int operand_min = 1;
  int operand_max = 20;
  std::size_t interactions_min = 3;
  std::size_t interactions_max = 8;
  std::size_t session_length = 5;
  /// Probability that an interaction re-attempts an earlier question.
  double repeat_rate = 0.1;
  double guess_rate = 0.05;
  std::vector<MisconceptionProfile> profiles = default_profiles();
  std::uint64_t seed = 7;

  static std::vector<MisconceptionProfile> default_profiles();
};

/// Throws ConfigError describing the first violated constraint.
void validate(const SimulatorConfig& cfg);

struct SimulatedCorpus {
  Corpus corpus;
  /// Profile name per student, aligned with corpus.students().
  std::vector<std::string> student_profiles;
  /// For every question, the choice id produced by each behaviour present.
  std::vector<std::map<std::string, std::string>> behaviour_choice;
};

SimulatedCorpus simulate_population(const SimulatorConfig& cfg);

/// Integer rendering of a rule applied to (a, b), or -1 if undefined.
long long apply_rule(const std::string& rule, int a, int b);

/// Worked addition facts ("a + b = c") over the operand range: the platform's
/// instructional documents, used alongside question and choice texts for
/// masked-LM domain adaptation.
std::vector<std::string> worked_examples(const SimulatorConfig& cfg);

}  // namespace mcqf::corpus
