#pragma once

#include <filesystem>

#include "mcqf/core/checkpoint.hpp"
#include "mcqf/text/encoder.hpp"

namespace mcqf::text {

/// Encoder shape as checkpoint metadata, and back. A missing key is a
/// CompatibilityError naming `path`.
Metadata encoder_metadata(const EncoderConfig& cfg);
EncoderConfig encoder_config_from(const Checkpoint& ck, const std::filesystem::path& path);

/// Loads `path` and checks its kind and vocabulary hash (CompatibilityError).
Checkpoint open_checkpoint(const std::filesystem::path& path, const std::string& kind, const Vocab& vocab);

void save_lm(const std::filesystem::path& path, const MaskedLm& lm, const Vocab& vocab);
void save_lm(const std::filesystem::path& path, const CausalLm& lm, const Vocab& vocab);
MaskedLm load_masked_lm(const std::filesystem::path& path, const Vocab& vocab);
CausalLm load_causal_lm(const std::filesystem::path& path, const Vocab& vocab);

}  // namespace mcqf::text
