#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mcqf::embed {

enum class Family { mlp_ae, lstm_ae, encoder_pool, clm_pool };

const char* to_string(Family f);
std::optional<Family> parse_family(const std::string& name);

inline constexpr std::size_t kDefaultEmbeddingDim = 32;

struct EmbedderConfig {
  Family family = Family::mlp_ae;
  /// Interactions of history considered (lstm_ae, encoder_pool, clm_pool).
  std::size_t seq_len = 10;
  std::size_t lstm_layers = 1;
  /// Bottleneck width of the autoencoders. Pooled families take the width
  /// of the language model instead.
  std::size_t dim = kDefaultEmbeddingDim;

  /// Stable identifier, e.g. "mlp_ae", "lstm_ae_L20_x3", "encoder_pool_L10",
  /// "clm_pool_L40".
  std::string id() const;

  bool operator==(const EmbedderConfig&) const = default;
};

/// The full grid: 1 mlp_ae, 16 lstm_ae (lengths 10/20/30/40 x depths 1-4),
/// 1 encoder_pool (length 10) and 4 clm_pool (lengths 10/20/30/40).
std::vector<EmbedderConfig> registry();

/// Registry entry with the given id. Throws ConfigError listing the valid
/// families and ids when unknown.
EmbedderConfig find_config(const std::string& id);

}  // namespace mcqf::embed
