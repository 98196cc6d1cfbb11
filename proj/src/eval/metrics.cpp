#include "mcqf/eval/metrics.hpp"

#include <cmath>
#include <vector>

#include "mcqf/core/errors.hpp"

namespace mcqf::eval {

ConfusionCounts confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw ContractError("confusion: " + std::to_string(labels.size()) + " labels vs " +
                        std::to_string(predictions.size()) + " predictions");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i], p = predictions[i];
    if ((y != 0 && y != 1) || (p != 0 && p != 1)) throw ContractError("confusion: labels must be 0 or 1");
    if (y == 1) {
      (p == 1 ? c.tp : c.fn) += 1;
    } else {
      (p == 1 ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

double mcc(const ConfusionCounts& c) {
  const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
  const double a = d(c.tp + c.fp), b = d(c.tp + c.fn), e = d(c.tn + c.fp), f = d(c.tn + c.fn);
  if (a == 0 || b == 0 || e == 0 || f == 0) return 0.0;
  // Products of counts below 2^26 are exact; the difference then is too.
  const double num = d(c.tp) * d(c.tn) - d(c.fp) * d(c.fn);
  return num / (std::sqrt(a * b) * std::sqrt(e * f));
}

double f1(const ConfusionCounts& c) {
  const std::uint64_t den = 2 * c.tp + c.fp + c.fn;
  return den == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(den);
}

double f1_macro(const ConfusionCounts& c) { return 0.5 * (f1(c) + f1(c.swapped())); }

double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw ContractError("accuracy of an empty confusion table");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

MetricSet metrics(const ConfusionCounts& c) {
  MetricSet m;
  m.accuracy = accuracy(c);
  m.mcc = mcc(c);
  m.f1_class1 = f1(c);
  m.f1_class0 = f1(c.swapped());
  m.f1_macro = 0.5 * (m.f1_class0 + m.f1_class1);
  return m;
}

int predict_label(double probability) { return probability >= kDecisionThreshold ? 1 : 0; }

int majority_label(std::span<const int> train_labels) {
  std::size_t ones = 0;
  for (int y : train_labels) ones += y == 1;
  return 2 * ones > train_labels.size() ? 1 : 0;
}

MetricSet dummy_baseline(std::span<const int> train_labels, std::span<const int> test_labels) {
  if (test_labels.empty()) throw ContractError("dummy baseline needs a non-empty test set");
  const std::vector<int> preds(test_labels.size(), majority_label(train_labels));
  return metrics(confusion(test_labels, preds));
}

}  // namespace mcqf::eval
