#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcqf/corpus/dataset.hpp"
#include "mcqf/embed/embedder.hpp"
#include "mcqf/eval/metrics.hpp"
#include "mcqf/model/train.hpp"

namespace mcqf::eval {

/// One row of a results table.
struct EvalResult {
  std::string model;              // MCQBert, Dummy, MCQStudentBertCat, MCQStudentBertSum
  std::string strategy = "none";  // cat, sum or none
  std::string embedder = "none";  // registry id or none
  std::size_t epoch = 0;          // chosen epoch, 0 for the dummy
  MetricSet metrics;
  std::uint64_t seed = 0;
  /// Set when the cell failed; the row is kept and marked.
  std::optional<std::string> failure;
};

inline constexpr const char* kResultsHeader = "model,strategy,embedder,epoch,mcc,f1_macro,f1_class0,f1_class1,accuracy,seed";

/// Failure rows carry "failed" in the epoch column and empty metrics.
std::string results_csv(const std::vector<EvalResult>& rows);
void write_results_csv(const std::filesystem::path& path, const std::vector<EvalResult>& rows);
/// Inverse of results_csv up to failure messages, which read back as
/// "failed". Throws IngestionError on a malformed table.
std::vector<EvalResult> parse_results_csv(const std::string& text);
std::vector<EvalResult> read_results_csv(const std::filesystem::path& path);

/// Orders rows by strategy name, then MCC descending, then model, embedder
/// and seed; failed rows go last within their strategy.
void sort_results(std::vector<EvalResult>& rows);

struct ExperimentSettings {
  corpus::SplitRatios ratios;
  model::TrainConfig exp1;       // 1 epoch by default
  model::TrainConfig retention;  // the forecasters start from this model
  model::TrainConfig student;    // 3 epochs by default
};

struct ExperimentOutcome {
  std::vector<EvalResult> rows;  // model row then dummy row
  model::TrainReport report;
  model::McqBert model;
};

/// MCQBert from the masked-LM encoder, fine-tuned on a question-exclusive
/// split of the correct-answer instances and scored on the held-out
/// questions, with the dummy baseline fitted on the same train set.
ExperimentOutcome run_experiment_1(const corpus::Corpus& corpus, const text::Vocab& vocab, const text::MaskedLm& mlm,
                                   const ExperimentSettings& settings, std::uint64_t seed);

/// Retention: trains and evaluates on the full correct-answer set.
ExperimentOutcome run_experiment_2(const corpus::Corpus& corpus, const text::Vocab& vocab, const text::MaskedLm& mlm,
                                   const ExperimentSettings& settings, std::uint64_t seed);

/// Produces the embedding table of one registry config for one split. Called
/// once per config; artifacts may be fitted on the split's training part.
using EmbeddingProvider =
    std::function<embed::EmbeddingTable(const std::string& config_id, const corpus::DatasetSplit& split)>;

/// Student-task split of the student-answer instances used by the grid of
/// `seed`.
corpus::DatasetSplit forecasting_split(const corpus::Corpus& corpus, const ExperimentSettings& settings,
                                       std::uint64_t seed);

struct GridOutcome {
  std::vector<EvalResult> rows;  // sorted
  corpus::DatasetSplit split;
};

/// Sees every trained cell before its model is dropped.
using CellObserver =
    std::function<void(const EvalResult& row, const model::StudentForecaster& model, const model::TrainReport& report)>;

/// Trains and evaluates one student forecaster per (config, strategy) on a
/// student-task split, plus the base MCQBert (scored on the same test set)
/// and the dummy. A failing cell becomes a failure row; the rest still run.
GridOutcome run_forecasting_grid(const corpus::Corpus& corpus, const text::Vocab& vocab, const model::McqBert& base,
                                 std::size_t base_epoch, const std::vector<std::string>& config_ids,
                                 const std::vector<model::Strategy>& strategies, const EmbeddingProvider& embeddings,
                                 const ExperimentSettings& settings, std::uint64_t seed,
                                 const CellObserver& observer = {});

/// Display name of the forecaster using `s`.
std::string forecaster_name(model::Strategy s);

}  // namespace mcqf::eval
