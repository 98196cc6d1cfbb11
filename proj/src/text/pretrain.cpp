#include "mcqf/text/pretrain.hpp"

#include <algorithm>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/optim.hpp"

namespace mcqf::text {

namespace {

constexpr std::uint64_t kEvalMaskStream = 0x5eed;

void check_common(const PretrainConfig& cfg, const std::vector<std::string>& texts) {
  if (texts.empty()) throw ConfigError("pretraining needs a non-empty text corpus");
  if (cfg.batch_size == 0) throw ConfigError("pretrain.batch_size must be positive");
  if (!(cfg.lr > 0.0)) throw ConfigError("pretrain.lr must be positive");
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, Rng* shuffle) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (shuffle) order = permutation(n, *shuffle);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size) {
    out.emplace_back(order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(std::min(n, i + batch_size)));
  }
  return out;
}

struct MlmBatch {
  TokenBatch tokens;
  std::vector<int> targets;  // aligned with packed rows
};

MlmBatch pack_masked(const std::vector<MaskedExample>& examples, const std::vector<std::size_t>& idx) {
  std::vector<const TokenSequence*> seqs;
  for (auto i : idx) seqs.push_back(&examples[i].input);
  MlmBatch b{TokenBatch::pack(std::span<const TokenSequence* const>(seqs)), {}};
  b.targets.assign(b.tokens.batch * b.tokens.seq, -1);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& t = examples[idx[r]].targets;
    for (std::size_t p = 0; p < b.tokens.valid[r]; ++p) b.targets[r * b.tokens.seq + p] = t[p];
  }
  return b;
}

std::vector<MaskedExample> mask_all(const std::vector<TokenSequence>& seqs, std::size_t vocab_size, double p,
                                    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<MaskedExample> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(mask_tokens(s, vocab_size, p, rng));
  return out;
}

double mlm_eval_loss(const MaskedLm& model, const std::vector<MaskedExample>& fixed, std::size_t batch_size) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& idx : batches(fixed.size(), batch_size, nullptr)) {
    auto b = pack_masked(fixed, idx);
    const std::size_t n = static_cast<std::size_t>(std::count_if(b.targets.begin(), b.targets.end(), [](int t) { return t >= 0; }));
    if (n == 0) continue;
    total += cross_entropy(model.logits(b.tokens), b.targets).item() * static_cast<double>(n);
    count += n;
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

struct ClmBatch {
  TokenBatch tokens;
  std::vector<int> targets;
};

ClmBatch pack_causal(const std::vector<TokenSequence>& seqs, const std::vector<std::size_t>& idx) {
  std::vector<const TokenSequence*> ptrs;
  for (auto i : idx) ptrs.push_back(&seqs[i]);
  ClmBatch b{TokenBatch::pack(std::span<const TokenSequence* const>(ptrs)), {}};
  b.targets.assign(b.tokens.batch * b.tokens.seq, -1);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& ids = seqs[idx[r]].ids;
    for (std::size_t p = 0; p + 1 < b.tokens.valid[r]; ++p) b.targets[r * b.tokens.seq + p] = static_cast<int>(ids[p + 1]);
  }
  return b;
}

double clm_eval_loss(const CausalLm& model, const std::vector<TokenSequence>& seqs, std::size_t batch_size) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& idx : batches(seqs.size(), batch_size, nullptr)) {
    auto b = pack_causal(seqs, idx);
    const std::size_t n = static_cast<std::size_t>(std::count_if(b.targets.begin(), b.targets.end(), [](int t) { return t >= 0; }));
    if (n == 0) continue;
    total += cross_entropy(model.logits(b.tokens), b.targets).item() * static_cast<double>(n);
    count += n;
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace

MaskedExample mask_tokens(const TokenSequence& seq, std::size_t vocab_size, double mask_prob, Rng& rng) {
  MaskedExample ex{seq, std::vector<int>(seq.ids.size(), -1)};
  std::vector<std::size_t> candidates;
  for (std::size_t p = 0; p < seq.ids.size(); ++p)
    if (seq.mask[p] && seq.ids[p] >= kNumReserved) candidates.push_back(p);
  if (candidates.empty()) return ex;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> chosen;
  for (auto p : candidates)
    if (unit(rng) < mask_prob) chosen.push_back(p);
  if (chosen.empty()) chosen.push_back(candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)]);

  std::uniform_int_distribution<std::size_t> random_token(kNumReserved, vocab_size - 1);
  for (auto p : chosen) {
    ex.targets[p] = static_cast<int>(seq.ids[p]);
    const double u = unit(rng);
    if (u < 0.8) {
      ex.input.ids[p] = kMask;
    } else if (u < 0.9) {
      ex.input.ids[p] = random_token(rng);
    }
  }
  return ex;
}

PretrainReport mlm_pretrain(MaskedLm& model, const Vocab& vocab, const std::vector<std::string>& texts,
                            const PretrainConfig& cfg) {
  if (!(cfg.mask_prob > 0.0 && cfg.mask_prob < 1.0)) throw ConfigError("pretrain.mask_prob must lie in (0, 1)");
  check_common(cfg, texts);
  const std::size_t max_len = std::min(cfg.max_len, model.encoder.config().max_positions);
  std::vector<TokenSequence> seqs;
  for (const auto& t : texts) seqs.push_back(encode_single(t, vocab, max_len));

  const auto fixed = mask_all(seqs, vocab.size(), cfg.mask_prob, derive_seed(cfg.seed, kEvalMaskStream));
  PretrainReport report;
  report.loss_curve.push_back(mlm_eval_loss(model, fixed, cfg.batch_size));

  Adam opt(model.params, AdamConfig{cfg.lr});
  Rng rng(cfg.seed);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto masked = mask_all(seqs, vocab.size(), cfg.mask_prob, rng());
    for (const auto& idx : batches(seqs.size(), cfg.batch_size, &rng)) {
      auto b = pack_masked(masked, idx);
      train_step(opt, [&] { return cross_entropy(model.logits(b.tokens, &rng), b.targets); }, cfg.clip_norm);
    }
    report.loss_curve.push_back(mlm_eval_loss(model, fixed, cfg.batch_size));
  }
  return report;
}

PretrainReport clm_pretrain(CausalLm& model, const Vocab& vocab, const std::vector<std::string>& texts,
                            const PretrainConfig& cfg) {
  check_common(cfg, texts);
  const std::size_t max_len = std::min(cfg.max_len, model.decoder.config().max_positions);
  std::vector<TokenSequence> seqs;
  for (const auto& t : texts) {
    auto s = encode_causal(t, vocab, max_len);
    if (s.valid_length() >= 2) seqs.push_back(std::move(s));
  }
  if (seqs.empty()) throw ConfigError("causal LM corpus has no text with at least one token");

  PretrainReport report;
  report.loss_curve.push_back(clm_eval_loss(model, seqs, cfg.batch_size));
  Adam opt(model.params, AdamConfig{cfg.lr});
  Rng rng(cfg.seed);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& idx : batches(seqs.size(), cfg.batch_size, &rng)) {
      auto b = pack_causal(seqs, idx);
      train_step(opt, [&] { return cross_entropy(model.logits(b.tokens, &rng), b.targets); }, cfg.clip_norm);
    }
    report.loss_curve.push_back(clm_eval_loss(model, seqs, cfg.batch_size));
  }
  return report;
}

double masked_accuracy(const MaskedLm& model, const Vocab& vocab, const std::vector<std::string>& texts,
                       const PretrainConfig& cfg, std::uint64_t mask_seed) {
  const std::size_t max_len = std::min(cfg.max_len, model.encoder.config().max_positions);
  std::vector<TokenSequence> seqs;
  for (const auto& t : texts) seqs.push_back(encode_single(t, vocab, max_len));
  const auto fixed = mask_all(seqs, vocab.size(), cfg.mask_prob, mask_seed);
  std::size_t hit = 0, total = 0;
  for (const auto& idx : batches(fixed.size(), cfg.batch_size, nullptr)) {
    auto b = pack_masked(fixed, idx);
    Tensor logits = model.logits(b.tokens);
    const std::size_t v = logits.cols();
    for (std::size_t r = 0; r < b.targets.size(); ++r) {
      if (b.targets[r] < 0) continue;
      auto row = logits.data().subspan(r * v, v);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      hit += best == static_cast<std::size_t>(b.targets[r]);
      ++total;
    }
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

}  // namespace mcqf::text
