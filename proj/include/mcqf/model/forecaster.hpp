#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "mcqf/text/encoder.hpp"

namespace mcqf::model {

/// How the student embedding enters the model: concatenated with the [CLS]
/// state before the head, or added to every input token embedding.
enum class Strategy { cat, sum };

const char* to_string(Strategy s);
std::optional<Strategy> parse_strategy(const std::string& name);

/// Transformer encoder with a single linear head on the [CLS] state; outputs
/// one logit for "this choice is correct".
class McqBert {
 public:
  McqBert() = default;
  /// zero_head initializes the head to zeros, so every probability is 0.5.
  McqBert(const text::EncoderConfig& cfg, std::uint64_t seed, bool zero_head = false);
  /// Encoder weights copied from a masked LM (domain-adapted start).
  static McqBert from_mlm(const text::MaskedLm& mlm, std::uint64_t seed, bool zero_head = false);

  /// [batch x 1] logits.
  Tensor logits(const text::TokenBatch& batch, Rng* dropout_rng = nullptr) const;
  /// Independent deep copy.
  McqBert clone() const;
  const text::EncoderConfig& config() const { return encoder.config(); }

  ParamStore params;
  text::TransformerEncoder encoder;  // "encoder.*"
  Linear head;                       // "head"
};

/// Probability that `choice_text` is a correct answer to `question_text`.
/// Depends only on the parameters and this pair, never on sibling choices.
double score_choice(const McqBert& model, const text::Vocab& vocab, const std::string& question_text,
                    const std::string& choice_text, std::size_t max_len);

/// MCQBert extended with a student embedding. The projection is bias-free so
/// a zero embedding contributes exactly nothing; the head is
/// Linear -> ReLU -> Linear(1) with input width 2H (cat) or H (sum).
class StudentForecaster {
 public:
  StudentForecaster() = default;
  /// Encoder weights are copied from `base`; projection and head are fresh.
  StudentForecaster(const McqBert& base, Strategy strategy, std::size_t embedding_dim, std::uint64_t seed);

  Strategy strategy() const { return strategy_; }
  std::size_t embedding_dim() const { return embedding_dim_; }
  const text::EncoderConfig& config() const { return encoder.config(); }

  /// `embeddings` is [batch x embedding_dim]; throws ShapeError otherwise.
  Tensor logits(const text::TokenBatch& batch, const Tensor& embeddings, Rng* dropout_rng = nullptr) const;
  /// The same encoder and head with the student path removed: no input
  /// shift for sum, a zero projection block for cat.
  Tensor logits_without_embedding(const text::TokenBatch& batch) const;
  StudentForecaster clone() const;

  /// Encoder parameters frozen or trainable.
  void set_encoder_trainable(bool flag);

  ParamStore params;
  text::TransformerEncoder encoder;  // "encoder.*"
  Linear projection;                 // "projection", bias-free
  Linear fc1;                        // "head.fc1"
  Linear fc2;                        // "head.fc2"

 private:
  Tensor head_logits(const Tensor& features) const;

  Strategy strategy_ = Strategy::cat;
  std::size_t embedding_dim_ = 0;
};

/// Rows of the [CLS] token in a packed [batch*seq x H] tensor.
Tensor cls_states(const Tensor& hidden, const text::TokenBatch& batch);

// Checkpoints store the encoder shape, strategy, embedder id and the vocab
// hash next to the parameters.
void save_model(const std::filesystem::path& path, const McqBert& model, const text::Vocab& vocab);
void save_model(const std::filesystem::path& path, const StudentForecaster& model, const text::Vocab& vocab,
                const std::string& embedder_id);

/// Throws CompatibilityError when the file holds another model kind or its
/// vocab hash differs from `vocab`, CheckpointError when malformed.
McqBert load_mcqbert(const std::filesystem::path& path, const text::Vocab& vocab);

struct LoadedForecaster {
  StudentForecaster model;
  std::string embedder_id;
};
/// Also refuses checkpoints of the other strategy.
LoadedForecaster load_student_forecaster(const std::filesystem::path& path, const text::Vocab& vocab,
                                         Strategy expected);

}  // namespace mcqf::model
