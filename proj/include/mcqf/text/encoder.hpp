#pragma once

#include <span>
#include <string>
#include <vector>

#include "mcqf/core/nn.hpp"
#include "mcqf/text/vocab.hpp"

namespace mcqf::text {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn = 256;
  std::size_t max_positions = 128;
  double dropout = 0.1;
  bool causal = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Sequences padded to a common length and packed row-major [batch x seq].
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> valid;

  /// Pads to the longest valid length among `seqs` (trailing padding beyond
  /// it is dropped).
  static TokenBatch pack(std::span<const TokenSequence* const> seqs);
  static TokenBatch pack(const std::vector<TokenSequence>& seqs);
  /// Row indices of each sequence's first token.
  std::vector<std::size_t> first_rows() const;
};

/// Token plus learned position embeddings, embedding LayerNorm and a stack of
/// post-norm transformer blocks. With `causal` set the blocks use a causal
/// mask (decoder-only LM).
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(ParamStore& ps, const std::string& prefix, const EncoderConfig& cfg, Rng& rng);

  /// Outputs of the embedding stage and of every block, each packed
  /// [batch*seq x hidden]. `input_shift`, when given, is a [batch x hidden]
  /// tensor added to every token's input embedding of its sequence before
  /// the embedding LayerNorm. Dropout is active only when `dropout_rng` is
  /// non-null.
  std::vector<Tensor> forward_layers(const TokenBatch& batch, const Tensor* input_shift = nullptr,
                                     Rng* dropout_rng = nullptr) const;
  Tensor forward(const TokenBatch& batch, const Tensor* input_shift = nullptr, Rng* dropout_rng = nullptr) const {
    return forward_layers(batch, input_shift, dropout_rng).back();
  }

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Tensor tok_emb_;
  Tensor pos_emb_;
  LayerNorm emb_ln_;
  std::vector<TransformerBlock> blocks_;
};

/// Bidirectional encoder with a masked-token prediction head.
struct MaskedLm {
  MaskedLm() = default;
  MaskedLm(const EncoderConfig& cfg, std::uint64_t seed);

  /// [batch*seq x vocab] logits.
  Tensor logits(const TokenBatch& batch, Rng* dropout_rng = nullptr) const;

  ParamStore params;
  TransformerEncoder encoder;  // parameters under "encoder."
  Linear transform;
  LayerNorm transform_ln;
  Linear decoder;
};

/// Decoder-only causal LM; hidden states of every layer are exposed so the
/// penultimate layer can be pooled.
struct CausalLm {
  CausalLm() = default;
  CausalLm(EncoderConfig cfg, std::uint64_t seed);

  Tensor logits(const TokenBatch& batch, Rng* dropout_rng = nullptr) const;
  /// Embedding output followed by each block's output.
  std::vector<Tensor> layers(const TokenBatch& batch) const { return decoder.forward_layers(batch); }

  ParamStore params;
  TransformerEncoder decoder;  // parameters under "decoder."
  Linear head;
};

}  // namespace mcqf::text
