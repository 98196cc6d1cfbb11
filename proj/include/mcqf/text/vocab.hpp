#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mcqf::text {

inline constexpr std::size_t kPad = 0;
inline constexpr std::size_t kCls = 1;
inline constexpr std::size_t kSep = 2;
inline constexpr std::size_t kMask = 3;
inline constexpr std::size_t kUnk = 4;
inline constexpr std::size_t kNumReserved = 5;

/// Literal spellings of the reserved tokens, indexed by id.
const std::vector<std::string>& reserved_tokens();

/// Splits on whitespace; every ASCII punctuation character becomes its own
/// token, except that the literal reserved spellings ("[SEP]" etc.) are kept
/// whole.
std::vector<std::string> tokenize(std::string_view text);

class Vocab {
 public:
  Vocab();

  /// Word-level vocabulary over tokens with count >= min_freq, ordered by
  /// descending frequency then lexicographically, after the reserved ids.
  /// Throws ContractError on an empty corpus.
  static Vocab build(const std::vector<std::string>& texts, std::size_t min_freq = 1);
  /// Rebuilds from an id-ordered token list whose head is the reserved set.
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token(std::size_t id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  /// FNV-1a over the newline-joined token list.
  std::uint64_t hash() const;

  /// UTF-8, one token per line, line number = id.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  std::vector<std::size_t> encode(std::string_view text) const;

 private:
  struct PrivateTag {};
  explicit Vocab(PrivateTag) {}

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TokenSequence {
  std::vector<std::size_t> ids;
  std::vector<std::uint8_t> mask;

  /// Number of leading non-pad positions.
  std::size_t valid_length() const;
};

/// [CLS] q [SEP] c [SEP], truncating the question first, then the choice,
/// and padding with [PAD] (mask 0) to max_len. Requires max_len >= 4.
TokenSequence encode_pair(std::string_view question, std::string_view choice, const Vocab& vocab,
                          std::size_t max_len);

/// [CLS] text [SEP] truncated and padded to max_len; used for masked-LM.
TokenSequence encode_single(std::string_view text, const Vocab& vocab, std::size_t max_len);

/// [CLS] text with no terminator and no padding; the [CLS] acts as the
/// causal LM's start token. Over-long text keeps its most recent tokens.
TokenSequence encode_causal(std::string_view text, const Vocab& vocab, std::size_t max_len);

}  // namespace mcqf::text
