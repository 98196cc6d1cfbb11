#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mcqf/core/nn.hpp"

namespace mcqf {

// Checkpoint layout (all integers and floats little-endian):
//
//   magic     8 bytes  "MCQFCKPT"
//   version   u32      currently 1
//   n_meta    u32
//   n_meta x { u32 key_len, key bytes, u32 value_len, value bytes }
//   n_params  u64
//   n_params x { u32 name_len, UTF-8 name, u32 rank, rank x u64 dims,
//                prod(dims) x f64 values }
//   checksum  u64      FNV-1a over every preceding byte
//
// Values are stored as raw IEEE-754 bit patterns, so a round trip is exact.

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct Checkpoint {
  Metadata metadata;
  ParamStore params;

  /// Value for `key`, or empty when absent.
  std::string meta(const std::string& key) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, const Metadata& metadata = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies every parameter of `target` from the checkpoint. Missing names or
/// mismatched shapes raise CompatibilityError and leave `target` untouched.
void restore_params(const Checkpoint& ckpt, ParamStore& target);

}  // namespace mcqf
