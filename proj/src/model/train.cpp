#include "mcqf/model/train.hpp"

#include <fstream>
#include <sstream>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/format.hpp"
#include "mcqf/core/optim.hpp"
#include "mcqf/core/random.hpp"

namespace mcqf::model {

namespace {

constexpr std::size_t kEvalBatch = 64;

void check_config(const TrainConfig& cfg) {
  if (cfg.epochs == 0) throw ConfigError("train.epochs must be positive");
  if (cfg.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(cfg.lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (!(cfg.pos_weight > 0.0)) throw ConfigError("train.pos_weight must be positive");
  if (cfg.max_len < 3) throw ConfigError("train.max_len must be at least 3");
}

void check_nonempty(const corpus::DatasetSplit& split) {
  if (split.train.empty() || split.val.empty()) throw ContractError("training needs non-empty train and val sets");
}

std::vector<text::TokenSequence> encode_all(const std::vector<corpus::BinaryInstance>& xs, const text::Vocab& vocab,
                                            std::size_t max_len) {
  std::vector<text::TokenSequence> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(text::encode_pair(x.question_text, x.choice_text, vocab, max_len));
  return out;
}

text::TokenBatch pack(const std::vector<text::TokenSequence>& seqs, std::span<const std::size_t> idx) {
  std::vector<const text::TokenSequence*> ptrs;
  ptrs.reserve(idx.size());
  for (auto i : idx) ptrs.push_back(&seqs[i]);
  return text::TokenBatch::pack(std::span<const text::TokenSequence* const>(ptrs));
}

std::vector<double> targets_of(const std::vector<corpus::BinaryInstance>& xs, std::span<const std::size_t> idx) {
  std::vector<double> t;
  t.reserve(idx.size());
  for (auto i : idx) t.push_back(static_cast<double>(xs[i].label));
  return t;
}

std::vector<std::vector<std::size_t>> chunks(const std::vector<std::size_t>& order, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += size) {
    out.emplace_back(order.begin() + static_cast<long>(i),
                     order.begin() + static_cast<long>(std::min(order.size(), i + size)));
  }
  return out;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

double sigmoid_of(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Mean BCE of the logits (unweighted) and the probabilities, in order.
struct Evaluation {
  double loss = 0.0;
  std::vector<double> probabilities;
};

template <typename LogitFn>
Evaluation evaluate(const std::vector<corpus::BinaryInstance>& xs, const std::vector<text::TokenSequence>& seqs,
                    LogitFn&& logits_of) {
  Evaluation ev;
  ev.probabilities.reserve(xs.size());
  double total = 0.0;
  for (const auto& idx : chunks(iota(xs.size()), kEvalBatch)) {
    const Tensor z = logits_of(pack(seqs, idx), idx);
    const auto t = targets_of(xs, idx);
    total += bce_with_logits(z, t).item() * static_cast<double>(idx.size());
    for (double v : z.data()) ev.probabilities.push_back(sigmoid_of(v));
  }
  ev.loss = xs.empty() ? 0.0 : total / static_cast<double>(xs.size());
  return ev;
}

// Shared loop: shuffle, step, evaluate on val each epoch, keep the best-MCC
// parameters. `step_logits(batch, idx, rng)` builds the training logits.
template <typename StepFn, typename EvalFn>
TrainReport fit(ParamStore& params, ParamStore trainable, const corpus::DatasetSplit& split,
                const std::vector<text::TokenSequence>& train_seqs, const std::vector<text::TokenSequence>& val_seqs,
                const TrainConfig& cfg, StepFn&& step_logits, EvalFn&& val_logits) {
  TrainReport report;
  Adam opt(std::move(trainable), AdamConfig{cfg.lr});
  Rng rng(cfg.seed);
  ParamStore best = params.clone();
  double best_mcc = 0.0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const auto& idx : chunks(permutation(split.train.size(), rng), cfg.batch_size)) {
      const auto batch = pack(train_seqs, idx);
      const auto t = targets_of(split.train, idx);
      const double loss = train_step(
          opt, [&] { return bce_with_logits(step_logits(batch, idx, rng), t, cfg.pos_weight); }, cfg.clip_norm);
      report.step_losses.push_back(loss);
      epoch_loss += loss * static_cast<double>(idx.size());
    }
    const Evaluation ev = evaluate(split.val, val_seqs, val_logits);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(split.train.size());
    rec.val_loss = ev.loss;
    rec.val = score(split.val, ev.probabilities);
    report.epochs.push_back(rec);
    if (report.chosen_epoch == 0 || rec.val.mcc > best_mcc) {
      report.chosen_epoch = epoch;
      best_mcc = rec.val.mcc;
      best.copy_values_from(params);
    }
  }
  params.copy_values_from(best);
  return report;
}

ParamStore trainable_subset(const ParamStore& params, bool freeze_encoder) {
  ParamStore out;
  for (const auto& [name, t] : params.entries()) {
    if (freeze_encoder && name.rfind("encoder.", 0) == 0) continue;
    out.add(name, t);
  }
  return out;
}

}  // namespace

std::string TrainReport::to_csv() const {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss,val_mcc,val_f1_macro,val_accuracy,chosen\n";
  for (const auto& e : epochs) {
    os << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss) << ','
       << format_double(e.val.mcc) << ',' << format_double(e.val.f1_macro) << ',' << format_double(e.val.accuracy)
       << ',' << (e.epoch == chosen_epoch ? 1 : 0) << '\n';
  }
  return os.str();
}

void TrainReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write training report '" + path.string() + "'");
  out << to_csv();
}

std::vector<int> labels_of(const std::vector<corpus::BinaryInstance>& instances) {
  std::vector<int> y;
  y.reserve(instances.size());
  for (const auto& x : instances) y.push_back(x.label);
  return y;
}

eval::MetricSet score(const std::vector<corpus::BinaryInstance>& instances, const std::vector<double>& probabilities) {
  std::vector<int> preds;
  preds.reserve(probabilities.size());
  for (double p : probabilities) preds.push_back(eval::predict_label(p));
  return eval::metrics(eval::confusion(labels_of(instances), preds));
}

Tensor gather_embeddings(const embed::EmbeddingTable& table, const std::vector<corpus::BinaryInstance>& instances,
                         std::span<const std::size_t> index) {
  Tensor out(Shape{index.size(), table.dim()}, 0.0);
  auto dst = out.storage().begin();
  for (auto i : index) {
    const auto& x = instances[i];
    if (!x.user_id) throw ContractError("instance " + x.question_id + "/" + x.choice_id + " has no student");
    const auto& v = table.at(*x.user_id, x.history_cutoff);
    dst = std::copy(v.begin(), v.end(), dst);
  }
  return out;
}

TrainReport train_mcqbert(McqBert& model, const text::Vocab& vocab, const corpus::DatasetSplit& split,
                          const TrainConfig& cfg) {
  check_config(cfg);
  if (split.policy == corpus::SplitPolicy::student_task) {
    throw ContractError("MCQBert trains on question-exclusive or full splits, got a student_task split");
  }
  check_nonempty(split);
  const auto train_seqs = encode_all(split.train, vocab, cfg.max_len);
  const auto val_seqs = encode_all(split.val, vocab, cfg.max_len);
  ParamStore trainable = trainable_subset(model.params, cfg.freeze_encoder);
  if (cfg.freeze_encoder) {
    for (auto [name, t] : model.params.entries())
      if (name.rfind("encoder.", 0) == 0) t.set_requires_grad(false);
  }
  auto report = fit(
      model.params, std::move(trainable), split, train_seqs, val_seqs, cfg,
      [&](const text::TokenBatch& b, std::span<const std::size_t>, Rng& rng) { return model.logits(b, &rng); },
      [&](const text::TokenBatch& b, std::span<const std::size_t>) { return model.logits(b); });
  if (cfg.freeze_encoder) model.params.set_requires_grad(true);
  return report;
}

TrainReport train_student_forecaster(StudentForecaster& model, const text::Vocab& vocab,
                                     const corpus::DatasetSplit& split, const embed::EmbeddingTable& embeddings,
                                     const TrainConfig& cfg) {
  check_config(cfg);
  if (split.policy != corpus::SplitPolicy::student_task) {
    throw ContractError(std::string("student forecasters train on student_task splits, got ") +
                        corpus::to_string(split.policy));
  }
  check_nonempty(split);
  if (embeddings.dim() != model.embedding_dim()) {
    throw ShapeError("embedding table width " + std::to_string(embeddings.dim()) + " does not match the model's " +
                     std::to_string(model.embedding_dim()));
  }
  // Resolve every lookup up front so a missing embedding fails before training.
  for (const auto* set : {&split.train, &split.val}) gather_embeddings(embeddings, *set, iota(set->size()));
  const auto train_seqs = encode_all(split.train, vocab, cfg.max_len);
  const auto val_seqs = encode_all(split.val, vocab, cfg.max_len);
  ParamStore trainable = trainable_subset(model.params, cfg.freeze_encoder);
  if (cfg.freeze_encoder) model.set_encoder_trainable(false);
  auto report = fit(
      model.params, std::move(trainable), split, train_seqs, val_seqs, cfg,
      [&](const text::TokenBatch& b, std::span<const std::size_t> idx, Rng& rng) {
        return model.logits(b, gather_embeddings(embeddings, split.train, idx), &rng);
      },
      [&](const text::TokenBatch& b, std::span<const std::size_t> idx) {
        return model.logits(b, gather_embeddings(embeddings, split.val, idx));
      });
  if (cfg.freeze_encoder) model.set_encoder_trainable(true);
  return report;
}

std::vector<double> predict(const McqBert& model, const text::Vocab& vocab,
                            const std::vector<corpus::BinaryInstance>& instances, std::size_t max_len) {
  const auto seqs = encode_all(instances, vocab, max_len);
  return evaluate(instances, seqs, [&](const text::TokenBatch& b, std::span<const std::size_t>) {
           return model.logits(b);
         }).probabilities;
}

std::vector<double> predict(const StudentForecaster& model, const text::Vocab& vocab,
                            const std::vector<corpus::BinaryInstance>& instances,
                            const embed::EmbeddingTable& embeddings, std::size_t max_len) {
  const auto seqs = encode_all(instances, vocab, max_len);
  return evaluate(instances, seqs, [&](const text::TokenBatch& b, std::span<const std::size_t> idx) {
           return model.logits(b, gather_embeddings(embeddings, instances, idx));
         }).probabilities;
}

}  // namespace mcqf::model
