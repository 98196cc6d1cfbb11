#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcqf/pipeline/config.hpp"

namespace mcqf::pipeline {

/// A pipeline stage failed; `stage` names it for the CLI.
struct StageError : std::runtime_error {
  StageError(std::string stage_name, const std::string& what)
      : std::runtime_error("stage '" + stage_name + "' failed: " + what), stage(std::move(stage_name)) {}
  std::string stage;
};

/// A run directory addressed by the config hash, <output_dir>/run-<hash>.
/// Every stage loads its outputs when they already exist and computes and
/// saves them otherwise, so subcommands can run separately or all at once.
///
///   config.json  manifest.json
///   corpus/{questions,interactions,topics}.jsonl  vocab.txt
///   mlm/{mlm.ckpt,loss.csv}
///   mcqbert/{retention.ckpt,retention_log.csv,retention.json}
///   seed-<s>/exp1/{mcqbert.ckpt,train_log.csv,results.csv}
///   seed-<s>/embeddings/...   seed-<s>/forecasters/...   seed-<s>/grid.csv
///   results/{exp1,exp2,grid}.csv   exports/...
class Workspace {
 public:
  /// `log` receives one line per stage; pass nullptr for silence.
  explicit Workspace(RunConfig cfg, std::ostream* log = nullptr);
  ~Workspace();
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const RunConfig& config() const { return cfg_; }
  const std::string& hash() const { return hash_; }
  const std::filesystem::path& dir() const { return dir_; }

  void simulate();
  void pretrain_mlm();
  /// Causal LMs of every seed's forecasting split.
  void pretrain_clm();
  /// Retention model, then one exp1 model per seed.
  void train_mcqbert();
  void train_embeddings();
  /// Every grid cell of every seed, with checkpoints and per-seed CSVs.
  void train_forecasters();

  std::filesystem::path evaluate_exp1();
  std::filesystem::path evaluate_exp2();
  std::filesystem::path evaluate_grid();
  /// Writes the table and its 2-D projection; returns the table path.
  std::filesystem::path export_embeddings(const std::string& config_id, std::uint64_t seed);

  /// Every stage, ending with all three results files.
  void run_all();

  /// Lists every file under the run directory with size and FNV-1a hash.
  void write_manifest() const;

 private:
  struct State;

  template <typename Fn>
  auto stage(const char* name, Fn&& fn);
  void note(const std::string& line) const;
  std::filesystem::path seed_dir(std::uint64_t seed) const;
  const corpus::DatasetSplit& split_for(std::uint64_t seed);
  EmbeddingFactory& factory_for(std::uint64_t seed);
  void ensure_retention();
  void ensure_exp1(std::uint64_t seed);
  void ensure_grid(std::uint64_t seed);

  RunConfig cfg_;
  std::string hash_;
  std::filesystem::path dir_;
  std::ostream* log_;
  std::unique_ptr<State> st_;
};

/// Embedder settings of the grid with `seed`, as the workspace uses them.
EmbedderTraining embedder_training(const RunConfig& cfg, std::uint64_t seed);

/// Applies the output-directory override from MCQF_OUTPUT_DIR when set.
void apply_environment(RunConfig& cfg);

}  // namespace mcqf::pipeline
