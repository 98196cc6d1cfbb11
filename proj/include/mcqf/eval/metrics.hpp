#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace mcqf::eval {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  /// The same table with the classes exchanged.
  ConfusionCounts swapped() const { return {tn, fn, tp, fp}; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Throws ContractError when the spans differ in length or hold labels other
/// than 0 and 1.
ConfusionCounts confusion(std::span<const int> labels, std::span<const int> predictions);

/// (tp*tn - fp*fn) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn)); 0 when any factor
/// of the denominator is 0.
double mcc(const ConfusionCounts& c);
/// Positive-class F1 = 2tp / (2tp + fp + fn); 0 when the denominator is 0.
double f1(const ConfusionCounts& c);
/// Mean of the F1 scores of class 1 and class 0.
double f1_macro(const ConfusionCounts& c);
/// (tp + tn) / total; throws ContractError for an empty table.
double accuracy(const ConfusionCounts& c);

struct MetricSet {
  double mcc = 0.0;
  double f1_macro = 0.0;
  double f1_class0 = 0.0;
  double f1_class1 = 0.0;
  double accuracy = 0.0;
};

/// Throws ContractError for an empty table.
MetricSet metrics(const ConfusionCounts& c);

/// Probability threshold turning scores into labels.
inline constexpr double kDecisionThreshold = 0.5;
int predict_label(double probability);

/// Most frequent label of `train_labels`; ties and empty input give 0.
int majority_label(std::span<const int> train_labels);

/// Scores the constant majority-class predictor on `test_labels`. Its MCC is
/// 0 by construction. Throws ContractError for an empty test set.
MetricSet dummy_baseline(std::span<const int> train_labels, std::span<const int> test_labels);

}  // namespace mcqf::eval
