#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mcqf/corpus/dataset.hpp"
#include "mcqf/embed/autoencoder.hpp"
#include "mcqf/embed/embedder.hpp"
#include "mcqf/text/pretrain.hpp"

namespace mcqf::pipeline {

/// Tokens of the history serialization template, so the vocabulary covers
/// serialized histories whatever the corpus texts contain.
const std::vector<std::string>& template_texts();

/// Question texts, then choice texts, then `documents`.
std::vector<std::string> mlm_texts(const corpus::Corpus& corpus, const std::vector<std::string>& documents);

/// One shared vocabulary for the encoder, the causal LM and the forecasters.
text::Vocab build_vocab(const corpus::Corpus& corpus, const std::vector<std::string>& documents, std::size_t min_freq);

/// (user, cutoff) pairs of the split's training instances.
std::set<std::pair<std::string, corpus::Timestamp>> train_cutoffs(const corpus::DatasetSplit& split);

/// Per student, the serialized history before their latest training cutoff
/// (causal LM loss covers every shorter prefix). Empty histories are skipped.
std::vector<std::string> clm_texts(const corpus::Corpus& corpus, const corpus::DatasetSplit& split,
                                   std::size_t seq_len);

/// Autoencoder inputs at every non-empty training cutoff, in corpus order.
std::vector<std::vector<double>> mlp_samples(const corpus::Corpus& corpus, const embed::FeatureSchema& schema,
                                             const corpus::DatasetSplit& split);
std::vector<std::vector<double>> lstm_samples(const corpus::Corpus& corpus, const embed::FeatureSchema& schema,
                                              const corpus::DatasetSplit& split, std::size_t seq_len);

struct EmbedderTraining {
  std::size_t mlp_hidden = 256;
  embed::AutoencoderTrainConfig autoencoder;
  text::EncoderConfig decoder;  // vocab_size is filled in from the vocabulary
  text::PretrainConfig clm;
  std::uint64_t seed = 17;
};

/// Fits the artifacts a registry config needs on a split's training part and
/// embeds every student at every interaction. Artifacts are cached per split
/// and the causal LM is shared by all clm_pool lengths.
class EmbeddingFactory {
 public:
  EmbeddingFactory(std::shared_ptr<const corpus::Corpus> corpus, std::shared_ptr<const text::Vocab> vocab,
                   std::shared_ptr<const text::MaskedLm> mlm, EmbedderTraining training);

  embed::EmbeddingTable operator()(const std::string& config_id, const corpus::DatasetSplit& split);

  /// Fits (or loads) what `config_id` needs without embedding anyone.
  void prepare(const std::string& config_id, const corpus::DatasetSplit& split);

  /// Artifacts found in `dir` are loaded instead of trained; trained ones are
  /// saved there with their loss curves. The directory is bound to the first
  /// split it sees and a different split raises CompatibilityError.
  void set_cache_dir(std::filesystem::path dir) { cache_dir_ = std::move(dir); }

  /// Artifacts fitted so far for the current split.
  const embed::EmbeddingArtifacts& artifacts() const { return artifacts_; }
  /// Training reports by config id (autoencoders) or "clm".
  const std::map<std::string, embed::AutoencoderReport>& autoencoder_reports() const { return ae_reports_; }
  const text::PretrainReport& clm_report() const { return clm_report_; }

 private:
  void ensure(const embed::EmbedderConfig& cfg, const corpus::DatasetSplit& split);
  void bind_cache(std::uint64_t split_key) const;

  EmbedderTraining training_;
  embed::EmbeddingArtifacts artifacts_;
  std::uint64_t split_key_ = 0;
  std::map<std::string, embed::AutoencoderReport> ae_reports_;
  text::PretrainReport clm_report_;
  std::filesystem::path cache_dir_;
};

/// Stable fingerprint of a split's training instances.
std::uint64_t split_fingerprint(const corpus::DatasetSplit& split);

}  // namespace mcqf::pipeline
