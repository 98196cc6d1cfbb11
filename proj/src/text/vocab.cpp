#include "mcqf/text/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/hash.hpp"

namespace mcqf::text {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> r{"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"};
  return r;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char ch = static_cast<unsigned char>(text[i]);
    if (ch == '[') {
      bool matched = false;
      for (const auto& r : reserved_tokens()) {
        if (text.substr(i, r.size()) == r) {
          flush();
          out.push_back(r);
          i += r.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    if (std::isspace(ch)) {
      flush();
    } else if (ch < 0x80 && std::ispunct(ch)) {
      flush();
      out.emplace_back(1, static_cast<char>(ch));
    } else {
      cur.push_back(static_cast<char>(ch));
    }
    ++i;
  }
  flush();
  return out;
}

Vocab::Vocab() : Vocab(from_tokens(reserved_tokens())) {}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  const auto& r = reserved_tokens();
  if (tokens.size() < r.size() || !std::equal(r.begin(), r.end(), tokens.begin())) {
    throw ContractError("vocabulary must start with the reserved tokens [PAD] [CLS] [SEP] [MASK] [UNK]");
  }
  Vocab v{PrivateTag{}};
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], i).second) {
      throw ContractError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

Vocab Vocab::build(const std::vector<std::string>& texts, std::size_t min_freq) {
  if (texts.empty()) throw ContractError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts)
    for (auto& tok : tokenize(t)) ++counts[tok];
  std::vector<std::pair<std::string, std::size_t>> items;
  for (auto& [tok, n] : counts) {
    const auto& r = reserved_tokens();
    if (n >= min_freq && std::find(r.begin(), r.end(), tok) == r.end()) items.emplace_back(tok, n);
  }
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens = reserved_tokens();
  for (auto& [tok, _] : items) tokens.push_back(tok);
  return from_tokens(std::move(tokens));
}

std::size_t Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(std::size_t id) const {
  if (id >= tokens_.size()) throw ContractError("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[id];
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

void Vocab::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IngestionError("cannot open '" + path.string() + "' for writing");
  for (const auto& t : tokens_) f << t << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestionError("cannot open vocabulary '" + path.string() + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(f, line)) tokens.push_back(line);
  return from_tokens(std::move(tokens));
}

std::vector<std::size_t> Vocab::encode(std::string_view text) const {
  std::vector<std::size_t> out;
  for (const auto& tok : tokenize(text)) out.push_back(id(tok));
  return out;
}

std::size_t TokenSequence::valid_length() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

namespace {

TokenSequence pad_to(std::vector<std::size_t> ids, std::size_t max_len) {
  TokenSequence s;
  s.mask.assign(ids.size(), 1);
  s.ids = std::move(ids);
  s.ids.resize(max_len, kPad);
  s.mask.resize(max_len, 0);
  return s;
}

}  // namespace

TokenSequence encode_pair(std::string_view question, std::string_view choice, const Vocab& vocab,
                          std::size_t max_len) {
  if (max_len < 4) throw ContractError("encode_pair needs max_len >= 4");
  auto q = vocab.encode(question);
  auto c = vocab.encode(choice);
  const std::size_t budget = max_len - 3;
  if (q.size() + c.size() > budget) {
    const std::size_t keep_c = std::min(c.size(), budget);
    c.resize(keep_c);
    q.resize(budget - keep_c);
  }
  std::vector<std::size_t> ids{kCls};
  ids.insert(ids.end(), q.begin(), q.end());
  ids.push_back(kSep);
  ids.insert(ids.end(), c.begin(), c.end());
  ids.push_back(kSep);
  return pad_to(std::move(ids), max_len);
}

TokenSequence encode_single(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 2) throw ContractError("encode_single needs max_len >= 2");
  auto t = vocab.encode(text);
  if (t.size() > max_len - 2) t.resize(max_len - 2);
  std::vector<std::size_t> ids{kCls};
  ids.insert(ids.end(), t.begin(), t.end());
  ids.push_back(kSep);
  return pad_to(std::move(ids), max_len);
}

TokenSequence encode_causal(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 1) throw ContractError("encode_causal needs max_len >= 1");
  auto t = vocab.encode(text);
  const std::size_t keep = std::min(t.size(), max_len - 1);
  std::vector<std::size_t> ids{kCls};
  ids.insert(ids.end(), t.end() - static_cast<long>(keep), t.end());
  const std::size_t n = ids.size();
  return pad_to(std::move(ids), n);
}

}  // namespace mcqf::text
