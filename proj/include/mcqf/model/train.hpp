#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcqf/corpus/dataset.hpp"
#include "mcqf/embed/embedder.hpp"
#include "mcqf/eval/metrics.hpp"
#include "mcqf/model/forecaster.hpp"

namespace mcqf::model {

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 16;
  double lr = 5e-4;
  double clip_norm = 1.0;
  std::size_t max_len = 32;
  /// Weight of positive examples in the BCE loss; 1 is plain BCE.
  double pos_weight = 1.0;
  bool freeze_encoder = false;
  std::uint64_t seed = 13;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  eval::MetricSet val;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  /// 1-based epoch with the highest validation MCC (earliest on ties); the
  /// model holds that epoch's parameters after training.
  std::size_t chosen_epoch = 0;
  /// Loss of every optimizer step, in order.
  std::vector<double> step_losses;

  /// Header epoch,train_loss,val_loss,val_mcc,val_f1_macro,val_accuracy,chosen.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

/// Fine-tunes on correct-answer instances with BCE. Accepts question-exclusive
/// and full (retention) splits; a student-task split is a ContractError.
TrainReport train_mcqbert(McqBert& model, const text::Vocab& vocab, const corpus::DatasetSplit& split,
                          const TrainConfig& cfg);

/// Fine-tunes on student-answer instances with each instance's embedding at
/// its history cutoff. Requires a student-task split (ContractError
/// otherwise); missing embeddings raise DependencyError.
TrainReport train_student_forecaster(StudentForecaster& model, const text::Vocab& vocab,
                                     const corpus::DatasetSplit& split, const embed::EmbeddingTable& embeddings,
                                     const TrainConfig& cfg);

/// Probabilities in instance order. Pure given the model, so safe to call
/// concurrently on a frozen model.
std::vector<double> predict(const McqBert& model, const text::Vocab& vocab,
                            const std::vector<corpus::BinaryInstance>& instances, std::size_t max_len);
std::vector<double> predict(const StudentForecaster& model, const text::Vocab& vocab,
                            const std::vector<corpus::BinaryInstance>& instances,
                            const embed::EmbeddingTable& embeddings, std::size_t max_len);

/// [n x dim] embeddings of the given instances, looked up by (user, cutoff).
Tensor gather_embeddings(const embed::EmbeddingTable& table, const std::vector<corpus::BinaryInstance>& instances,
                         std::span<const std::size_t> index);

std::vector<int> labels_of(const std::vector<corpus::BinaryInstance>& instances);
eval::MetricSet score(const std::vector<corpus::BinaryInstance>& instances, const std::vector<double>& probabilities);

}  // namespace mcqf::model
