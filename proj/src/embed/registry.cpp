#include "mcqf/embed/registry.hpp"

#include "mcqf/core/errors.hpp"

namespace mcqf::embed {

namespace {
constexpr std::size_t kLengths[] = {10, 20, 30, 40};
}

const char* to_string(Family f) {
  switch (f) {
    case Family::mlp_ae: return "mlp_ae";
    case Family::lstm_ae: return "lstm_ae";
    case Family::encoder_pool: return "encoder_pool";
    case Family::clm_pool: return "clm_pool";
  }
  return "?";
}

std::optional<Family> parse_family(const std::string& name) {
  for (Family f : {Family::mlp_ae, Family::lstm_ae, Family::encoder_pool, Family::clm_pool})
    if (name == to_string(f)) return f;
  return std::nullopt;
}

std::string EmbedderConfig::id() const {
  switch (family) {
    case Family::mlp_ae: return "mlp_ae";
    case Family::lstm_ae: return "lstm_ae_L" + std::to_string(seq_len) + "_x" + std::to_string(lstm_layers);
    case Family::encoder_pool: return "encoder_pool_L" + std::to_string(seq_len);
    case Family::clm_pool: return "clm_pool_L" + std::to_string(seq_len);
  }
  return "?";
}

std::vector<EmbedderConfig> registry() {
  std::vector<EmbedderConfig> out;
  out.push_back({Family::mlp_ae, 0, 0, kDefaultEmbeddingDim});
  for (auto len : kLengths)
    for (std::size_t depth = 1; depth <= 4; ++depth) out.push_back({Family::lstm_ae, len, depth, kDefaultEmbeddingDim});
  out.push_back({Family::encoder_pool, 10, 0, kDefaultEmbeddingDim});
  for (auto len : kLengths) out.push_back({Family::clm_pool, len, 0, kDefaultEmbeddingDim});
  return out;
}

EmbedderConfig find_config(const std::string& id) {
  for (const auto& c : registry())
    if (c.id() == id) return c;
  std::string msg = "unknown embedder '" + id + "'; valid families: mlp_ae, lstm_ae, encoder_pool, clm_pool (ids:";
  for (const auto& c : registry()) msg += " " + c.id();
  throw ConfigError(msg + ")");
}

}  // namespace mcqf::embed
