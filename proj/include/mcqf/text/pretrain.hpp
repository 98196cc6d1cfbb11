#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcqf/text/encoder.hpp"

namespace mcqf::text {

struct PretrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::size_t max_len = 64;
  double lr = 1e-3;
  double mask_prob = 0.15;
  double clip_norm = 1.0;
  std::uint64_t seed = 11;
};

struct PretrainReport {
  /// Training-set loss before any update (index 0) and after each epoch,
  /// evaluated without dropout and, for the masked LM, with a fixed mask.
  std::vector<double> loss_curve;
};

/// A masked copy of a sequence: targets hold the original id at selected
/// positions and -1 elsewhere.
struct MaskedExample {
  TokenSequence input;
  std::vector<int> targets;
};

/// Selects each non-reserved position with probability mask_prob (at least
/// one per sequence when any exists) and replaces it with [MASK] 80% of the
/// time, a random vocabulary token 10%, or leaves it unchanged 10%.
MaskedExample mask_tokens(const TokenSequence& seq, std::size_t vocab_size, double mask_prob, Rng& rng);

/// Throws ConfigError unless mask_prob lies in (0, 1).
PretrainReport mlm_pretrain(MaskedLm& model, const Vocab& vocab, const std::vector<std::string>& texts,
                            const PretrainConfig& cfg);

/// Next-token prediction with a causal mask over [CLS]-prefixed texts.
PretrainReport clm_pretrain(CausalLm& model, const Vocab& vocab, const std::vector<std::string>& texts,
                            const PretrainConfig& cfg);

/// Fraction of masked positions whose argmax prediction is the original
/// token, under a fixed masking seed.
double masked_accuracy(const MaskedLm& model, const Vocab& vocab, const std::vector<std::string>& texts,
                       const PretrainConfig& cfg, std::uint64_t mask_seed);

}  // namespace mcqf::text
