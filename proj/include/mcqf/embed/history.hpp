#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcqf/corpus/types.hpp"

namespace mcqf::embed {

using corpus::Timestamp;

/// Interactions of `record` with timestamp strictly before `cutoff`, oldest
/// first. Records are chronological, so this is a prefix.
std::span<const corpus::Interaction> history_before(const corpus::StudentRecord& record, Timestamp cutoff);

/// Time-delta buckets for sequence rows: first interaction of the history,
/// under 5 minutes, under an hour, under a day, a day or more.
inline constexpr std::size_t kTimeBuckets = 5;
std::size_t time_bucket(Timestamp previous, Timestamp current, bool first);

/// Column layout of the engineered history features, fixed by a question
/// bank.
///
/// Flat feature vector (width()):
///   per question, in bank order: attempted, correct (latest attempt),
///     one column per choice of that question (latest selection, multi-hot)
///   aggregate: log(1 + attempt count), overall accuracy,
///     accuracy per topic (topics that own a question, sorted by id)
///
/// Sequence row (row_width()), one per interaction:
///   correct flag, selected choice positions (multi-hot over max_choices),
///   topic one-hot, time-delta bucket one-hot
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(const corpus::Corpus& bank);

  std::size_t width() const { return width_; }
  std::size_t row_width() const { return 1 + max_choices_ + topics_.size() + kTimeBuckets; }
  std::size_t max_choices() const { return max_choices_; }
  const std::vector<std::string>& topics() const { return topics_; }

  struct QuestionSlot {
    std::size_t offset = 0;
    std::size_t topic = 0;
    std::vector<std::string> choice_ids;
  };
  /// Throws ReferentialError for ids outside the bank.
  const QuestionSlot& slot(const std::string& question_id) const;
  std::size_t aggregate_offset() const { return aggregate_offset_; }

 private:
  std::unordered_map<std::string, QuestionSlot> slots_;
  std::vector<std::string> topics_;
  std::size_t max_choices_ = 0;
  std::size_t aggregate_offset_ = 0;
  std::size_t width_ = 0;
};

/// Engineered features of the history strictly before `cutoff`. An empty
/// history gives the zero vector. Throws ContractError for negative cutoffs
/// and ReferentialError for questions outside the schema's bank.
std::vector<double> history_feature_vector(const corpus::StudentRecord& record, Timestamp cutoff,
                                           const FeatureSchema& schema);

/// The last `seq_len` interactions before `cutoff` as a row-major
/// [seq_len x row_width] block, oldest first. Shorter histories are
/// left-padded with zero rows.
std::vector<double> interaction_rows(const corpus::StudentRecord& record, Timestamp cutoff, std::size_t seq_len,
                                     const FeatureSchema& schema);

/// Renders the last `seq_len` interactions before `cutoff` as
/// "Q: <question> A: <choice texts> CORRECT|WRONG" segments, oldest first,
/// joined by " [SEP] ". Multiple selected choices are joined by " , ".
/// Empty history gives "".
std::string serialize_history(const corpus::StudentRecord& record, Timestamp cutoff, std::size_t seq_len,
                              const corpus::Corpus& bank);

}  // namespace mcqf::embed
