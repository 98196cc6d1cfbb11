#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcqf/corpus/simulator.hpp"
#include "mcqf/eval/experiments.hpp"
#include "mcqf/pipeline/artifacts.hpp"

namespace mcqf::pipeline {

struct CorpusSource {
  /// "simulate" or "files".
  std::string source = "simulate";
  corpus::SimulatorConfig simulator;
  std::filesystem::path questions, interactions, topics;
  /// Adds "a + b = c" documents over the simulator's operand range to the
  /// masked-LM corpus.
  bool worked_examples = true;
};

/// Everything a run depends on. Defaults are the library defaults; every
/// seed has a fixed default so no run depends on the clock.
struct RunConfig {
  CorpusSource corpus;
  std::size_t min_freq = 1;
  text::EncoderConfig encoder;  // vocab_size comes from the vocabulary
  text::EncoderConfig decoder;
  text::PretrainConfig mlm;
  text::PretrainConfig clm;
  std::uint64_t model_seed = 1;  // masked-LM initialization
  EmbedderTraining embedders;
  eval::ExperimentSettings experiments;
  std::vector<std::string> grid_embedders{"clm_pool_L10"};
  std::vector<model::Strategy> grid_strategies{model::Strategy::cat, model::Strategy::sum};
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "runs";

  RunConfig();
};

struct ConfigIssue {
  std::string key;  // dotted path, e.g. "grid.embedders[1].sequence_length"
  std::string message;
};

struct ConfigResult {
  std::optional<RunConfig> config;
  std::vector<ConfigIssue> errors;  // all problems, not only the first
};

/// Reads and validates a config object. Relative corpus paths resolve
/// against `base_dir`.
ConfigResult parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
/// An unreadable or unparsable file gives a single error with an empty key.
ConfigResult load_config(const std::filesystem::path& path);

/// Canonical form with every field present.
nlohmann::json to_json(const RunConfig& cfg);
/// Hash of the canonical form without output_dir, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

std::string format_issues(const std::vector<ConfigIssue>& issues);

}  // namespace mcqf::pipeline
