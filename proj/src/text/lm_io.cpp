#include "mcqf/text/lm_io.hpp"

#include "mcqf/core/errors.hpp"
#include "mcqf/core/format.hpp"

namespace mcqf::text {

namespace {

std::string require(const Checkpoint& ck, const std::string& key, const std::filesystem::path& path) {
  std::string v = ck.meta(key);
  if (v.empty()) throw CompatibilityError(path.string() + ": checkpoint lacks '" + key + "'");
  return v;
}

Metadata header(const char* kind, const EncoderConfig& cfg, const Vocab& vocab) {
  Metadata meta{{"kind", kind}, {"vocab_hash", std::to_string(vocab.hash())}};
  for (auto& kv : encoder_metadata(cfg)) meta.push_back(kv);
  return meta;
}

}  // namespace

Metadata encoder_metadata(const EncoderConfig& c) {
  return {{"vocab_size", std::to_string(c.vocab_size)}, {"hidden", std::to_string(c.hidden)},
          {"layers", std::to_string(c.layers)},         {"heads", std::to_string(c.heads)},
          {"ffn", std::to_string(c.ffn)},               {"max_positions", std::to_string(c.max_positions)},
          {"dropout", format_double(c.dropout)}};
}

EncoderConfig encoder_config_from(const Checkpoint& ck, const std::filesystem::path& path) {
  auto num = [&](const char* k) { return static_cast<std::size_t>(std::stoull(require(ck, k, path))); };
  EncoderConfig c;
  c.vocab_size = num("vocab_size");
  c.hidden = num("hidden");
  c.layers = num("layers");
  c.heads = num("heads");
  c.ffn = num("ffn");
  c.max_positions = num("max_positions");
  c.dropout = std::stod(require(ck, "dropout", path));
  return c;
}

Checkpoint open_checkpoint(const std::filesystem::path& path, const std::string& kind, const Vocab& vocab) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.meta("kind") != kind) {
    throw CompatibilityError(path.string() + ": expected a " + kind + " checkpoint, found '" + ck.meta("kind") + "'");
  }
  const std::string want = std::to_string(vocab.hash());
  if (ck.meta("vocab_hash") != want) {
    throw CompatibilityError(path.string() + ": vocabulary hash " + ck.meta("vocab_hash") +
                             " does not match the loaded vocabulary (" + want + ")");
  }
  return ck;
}

void save_lm(const std::filesystem::path& path, const MaskedLm& lm, const Vocab& vocab) {
  save_checkpoint(path, lm.params, header("masked_lm", lm.encoder.config(), vocab));
}

void save_lm(const std::filesystem::path& path, const CausalLm& lm, const Vocab& vocab) {
  save_checkpoint(path, lm.params, header("causal_lm", lm.decoder.config(), vocab));
}

MaskedLm load_masked_lm(const std::filesystem::path& path, const Vocab& vocab) {
  const Checkpoint ck = open_checkpoint(path, "masked_lm", vocab);
  MaskedLm lm(encoder_config_from(ck, path), 0);
  restore_params(ck, lm.params);
  return lm;
}

CausalLm load_causal_lm(const std::filesystem::path& path, const Vocab& vocab) {
  const Checkpoint ck = open_checkpoint(path, "causal_lm", vocab);
  CausalLm lm(encoder_config_from(ck, path), 0);
  restore_params(ck, lm.params);
  return lm;
}

}  // namespace mcqf::text
