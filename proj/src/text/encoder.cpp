#include "mcqf/text/encoder.hpp"

#include <algorithm>

#include "mcqf/core/errors.hpp"

namespace mcqf::text {

void EncoderConfig::validate() const {
  if (vocab_size <= kNumReserved) throw ConfigError("encoder.vocab_size must exceed the reserved token count");
  if (hidden == 0) throw ConfigError("encoder.hidden must be positive");
  if (layers == 0) throw ConfigError("encoder.layers must be positive");
  if (heads == 0 || hidden % heads != 0) throw ConfigError("encoder.hidden must be divisible by encoder.heads");
  if (ffn == 0) throw ConfigError("encoder.ffn must be positive");
  if (max_positions < 4) throw ConfigError("encoder.max_positions must be at least 4");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("encoder.dropout must lie in [0, 1)");
}

TokenBatch TokenBatch::pack(std::span<const TokenSequence* const> seqs) {
  TokenBatch b;
  b.batch = seqs.size();
  for (const auto* s : seqs) {
    const std::size_t v = s->valid_length();
    if (v == 0) throw ContractError("cannot pack an empty token sequence");
    b.valid.push_back(v);
    b.seq = std::max(b.seq, v);
  }
  b.ids.assign(b.batch * b.seq, kPad);
  for (std::size_t i = 0; i < b.batch; ++i)
    std::copy_n(seqs[i]->ids.begin(), b.valid[i], b.ids.begin() + static_cast<long>(i * b.seq));
  return b;
}

TokenBatch TokenBatch::pack(const std::vector<TokenSequence>& seqs) {
  std::vector<const TokenSequence*> ptrs;
  ptrs.reserve(seqs.size());
  for (const auto& s : seqs) ptrs.push_back(&s);
  return pack(std::span<const TokenSequence* const>(ptrs));
}

std::vector<std::size_t> TokenBatch::first_rows() const {
  std::vector<std::size_t> rows(batch);
  for (std::size_t i = 0; i < batch; ++i) rows[i] = i * seq;
  return rows;
}

TransformerEncoder::TransformerEncoder(ParamStore& ps, const std::string& prefix, const EncoderConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  tok_emb_ = ps.add(prefix + ".tok_emb", Tensor(Shape{cfg.vocab_size, cfg.hidden}));
  fill_normal(tok_emb_, 0.0, 0.02, rng);
  pos_emb_ = ps.add(prefix + ".pos_emb", Tensor(Shape{cfg.max_positions, cfg.hidden}));
  fill_normal(pos_emb_, 0.0, 0.02, rng);
  emb_ln_ = LayerNorm(ps, prefix + ".emb_ln", cfg.hidden);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    blocks_.emplace_back(ps, prefix + ".block" + std::to_string(l), cfg.hidden, cfg.heads, cfg.ffn, rng);
  }
}

std::vector<Tensor> TransformerEncoder::forward_layers(const TokenBatch& batch, const Tensor* input_shift,
                                                       Rng* dropout_rng) const {
  if (batch.seq > cfg_.max_positions) {
    throw ContractError("sequence length " + std::to_string(batch.seq) + " exceeds max_positions " +
                        std::to_string(cfg_.max_positions));
  }
  for (auto id : batch.ids) {
    if (id >= cfg_.vocab_size) {
      throw ContractError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(cfg_.vocab_size));
    }
  }
  std::vector<std::size_t> positions(batch.ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i % batch.seq;
  Tensor x = add(gather_rows(tok_emb_, batch.ids), gather_rows(pos_emb_, positions));
  if (input_shift) {
    if (input_shift->rank() != 2 || input_shift->rows() != batch.batch || input_shift->cols() != cfg_.hidden) {
      throw ShapeError("input shift must be [" + std::to_string(batch.batch) + "x" + std::to_string(cfg_.hidden) +
                       "], got " + shape_str(input_shift->shape()));
    }
    std::vector<std::size_t> owner(batch.ids.size());
    for (std::size_t i = 0; i < owner.size(); ++i) owner[i] = i / batch.seq;
    x = add(x, gather_rows(*input_shift, owner));
  }
  x = emb_ln_.forward(x);
  const double drop = dropout_rng ? cfg_.dropout : 0.0;
  if (dropout_rng) x = dropout(x, drop, *dropout_rng);

  std::vector<Tensor> out{x};
  const AttentionShape shape{batch.batch, batch.seq, cfg_.heads, cfg_.causal};
  for (const auto& block : blocks_) {
    x = block.forward(x, shape, batch.valid, drop, dropout_rng);
    out.push_back(x);
  }
  return out;
}

MaskedLm::MaskedLm(const EncoderConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  EncoderConfig c = cfg;
  c.causal = false;
  encoder = TransformerEncoder(params, "encoder", c, rng);
  transform = Linear(params, "mlm.transform", c.hidden, c.hidden, true, rng);
  transform_ln = LayerNorm(params, "mlm.transform_ln", c.hidden);
  decoder = Linear(params, "mlm.decoder", c.hidden, c.vocab_size, true, rng);
}

Tensor MaskedLm::logits(const TokenBatch& batch, Rng* dropout_rng) const {
  Tensor h = encoder.forward(batch, nullptr, dropout_rng);
  return decoder.forward(transform_ln.forward(gelu(transform.forward(h))));
}

CausalLm::CausalLm(EncoderConfig cfg, std::uint64_t seed) {
  Rng rng(seed);
  cfg.causal = true;
  decoder = TransformerEncoder(params, "decoder", cfg, rng);
  head = Linear(params, "lm_head", cfg.hidden, cfg.vocab_size, true, rng);
}

Tensor CausalLm::logits(const TokenBatch& batch, Rng* dropout_rng) const {
  return head.forward(decoder.forward(batch, nullptr, dropout_rng));
}

}  // namespace mcqf::text
