#include "mcqf/model/forecaster.hpp"

#include <cmath>

#include "mcqf/core/checkpoint.hpp"
#include "mcqf/core/errors.hpp"
#include "mcqf/text/lm_io.hpp"

namespace mcqf::model {

namespace {

InitConfig head_init(std::size_t fan_in) { return InitConfig{1.0 / std::sqrt(static_cast<double>(fan_in))}; }

std::string require_meta(const Checkpoint& ck, const std::string& key, const std::filesystem::path& path) {
  std::string v = ck.meta(key);
  if (v.empty()) throw CompatibilityError(path.string() + ": checkpoint lacks '" + key + "'");
  return v;
}

void copy_encoder(ParamStore& target, const ParamStore& source) {
  for (auto [name, t] : target.entries()) {  // handle copies alias the stored tensors
    if (name.rfind("encoder.", 0) != 0) continue;
    const Tensor& src = source.at(name);
    if (src.shape() != t.shape()) throw ShapeError("encoder parameter '" + name + "' shape mismatch");
    t.storage() = src.storage();
  }
}

}  // namespace

const char* to_string(Strategy s) { return s == Strategy::cat ? "cat" : "sum"; }

std::optional<Strategy> parse_strategy(const std::string& name) {
  if (name == "cat") return Strategy::cat;
  if (name == "sum") return Strategy::sum;
  return std::nullopt;
}

Tensor cls_states(const Tensor& hidden, const text::TokenBatch& batch) {
  const auto rows = batch.first_rows();
  return gather_rows(hidden, rows);
}

McqBert::McqBert(const text::EncoderConfig& cfg, std::uint64_t seed, bool zero_head) {
  Rng rng(seed);
  text::EncoderConfig c = cfg;
  c.causal = false;
  encoder = text::TransformerEncoder(params, "encoder", c, rng);
  head = Linear(params, "head", c.hidden, 1, true, rng, head_init(c.hidden));
  if (zero_head) {
    std::fill(head.weight.storage().begin(), head.weight.storage().end(), 0.0);
    std::fill(head.bias.storage().begin(), head.bias.storage().end(), 0.0);
  }
}

McqBert McqBert::from_mlm(const text::MaskedLm& mlm, std::uint64_t seed, bool zero_head) {
  McqBert m(mlm.encoder.config(), seed, zero_head);
  copy_encoder(m.params, mlm.params);
  return m;
}

Tensor McqBert::logits(const text::TokenBatch& batch, Rng* dropout_rng) const {
  return head.forward(cls_states(encoder.forward(batch, nullptr, dropout_rng), batch));
}

McqBert McqBert::clone() const {
  McqBert m(config(), 0);
  m.params.copy_values_from(params);
  return m;
}

double score_choice(const McqBert& model, const text::Vocab& vocab, const std::string& question_text,
                    const std::string& choice_text, std::size_t max_len) {
  const auto seq = text::encode_pair(question_text, choice_text, vocab, max_len);
  const double z = model.logits(text::TokenBatch::pack(std::vector<text::TokenSequence>{seq})).item();
  return 1.0 / (1.0 + std::exp(-z));
}

StudentForecaster::StudentForecaster(const McqBert& base, Strategy strategy, std::size_t embedding_dim,
                                     std::uint64_t seed)
    : strategy_(strategy), embedding_dim_(embedding_dim) {
  if (embedding_dim == 0) throw ConfigError("student embedding width must be positive");
  Rng rng(seed);
  const auto& c = base.config();
  encoder = text::TransformerEncoder(params, "encoder", c, rng);
  copy_encoder(params, base.params);
  const std::size_t h = c.hidden;
  projection = Linear(params, "projection", embedding_dim, h, false, rng, head_init(embedding_dim));
  const std::size_t head_in = strategy == Strategy::cat ? 2 * h : h;
  fc1 = Linear(params, "head.fc1", head_in, h, true, rng, head_init(head_in));
  fc2 = Linear(params, "head.fc2", h, 1, true, rng, head_init(h));
}

Tensor StudentForecaster::head_logits(const Tensor& features) const { return fc2.forward(relu(fc1.forward(features))); }

Tensor StudentForecaster::logits(const text::TokenBatch& batch, const Tensor& embeddings, Rng* dropout_rng) const {
  if (embeddings.rank() != 2 || embeddings.rows() != batch.batch || embeddings.cols() != embedding_dim_) {
    throw ShapeError("student embeddings must be [" + std::to_string(batch.batch) + "x" + std::to_string(embedding_dim_) +
                     "], got " + shape_str(embeddings.shape()));
  }
  Tensor projected = projection.forward(embeddings);
  if (strategy_ == Strategy::sum) {
    return head_logits(cls_states(encoder.forward(batch, &projected, dropout_rng), batch));
  }
  Tensor cls = cls_states(encoder.forward(batch, nullptr, dropout_rng), batch);
  return head_logits(concat_cols(cls, projected));
}

Tensor StudentForecaster::logits_without_embedding(const text::TokenBatch& batch) const {
  Tensor cls = cls_states(encoder.forward(batch), batch);
  if (strategy_ == Strategy::sum) return head_logits(cls);
  return head_logits(concat_cols(cls, Tensor(Shape{batch.batch, config().hidden}, 0.0)));
}

StudentForecaster StudentForecaster::clone() const {
  McqBert shell(config(), 0);
  StudentForecaster f(shell, strategy_, embedding_dim_, 0);
  f.params.copy_values_from(params);
  return f;
}

void StudentForecaster::set_encoder_trainable(bool flag) {
  for (auto [name, t] : params.entries())
    if (name.rfind("encoder.", 0) == 0) t.set_requires_grad(flag);
}

void save_model(const std::filesystem::path& path, const McqBert& model, const text::Vocab& vocab) {
  Metadata meta{{"kind", "mcqbert"}, {"vocab_hash", std::to_string(vocab.hash())}};
  for (auto& kv : text::encoder_metadata(model.config())) meta.push_back(kv);
  save_checkpoint(path, model.params, meta);
}

void save_model(const std::filesystem::path& path, const StudentForecaster& model, const text::Vocab& vocab,
                const std::string& embedder_id) {
  Metadata meta{{"kind", "student_forecaster"},
                {"vocab_hash", std::to_string(vocab.hash())},
                {"strategy", to_string(model.strategy())},
                {"embedder", embedder_id},
                {"embedding_dim", std::to_string(model.embedding_dim())}};
  for (auto& kv : text::encoder_metadata(model.config())) meta.push_back(kv);
  save_checkpoint(path, model.params, meta);
}

McqBert load_mcqbert(const std::filesystem::path& path, const text::Vocab& vocab) {
  const Checkpoint ck = text::open_checkpoint(path, "mcqbert", vocab);
  McqBert m(text::encoder_config_from(ck, path), 0);
  restore_params(ck, m.params);
  return m;
}

LoadedForecaster load_student_forecaster(const std::filesystem::path& path, const text::Vocab& vocab,
                                         Strategy expected) {
  const Checkpoint ck = text::open_checkpoint(path, "student_forecaster", vocab);
  const std::string strategy = require_meta(ck, "strategy", path);
  if (strategy != to_string(expected)) {
    throw CompatibilityError(path.string() + ": checkpoint holds a '" + strategy + "' model, expected '" +
                             to_string(expected) + "'");
  }
  const McqBert shell(text::encoder_config_from(ck, path), 0);
  StudentForecaster f(shell, expected, static_cast<std::size_t>(std::stoull(require_meta(ck, "embedding_dim", path))), 0);
  restore_params(ck, f.params);
  return {std::move(f), require_meta(ck, "embedder", path)};
}

}  // namespace mcqf::model
