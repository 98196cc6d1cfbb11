#include "mcqf/pipeline/artifacts.hpp"

#include <fstream>
#include <limits>
#include <map>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/format.hpp"
#include "mcqf/core/hash.hpp"
#include "mcqf/core/random.hpp"
#include "mcqf/embed/history.hpp"
#include "mcqf/embed/registry.hpp"
#include "mcqf/text/lm_io.hpp"

namespace mcqf::pipeline {

namespace {

// Largest training cutoff per student, keyed by user id.
std::map<std::string, corpus::Timestamp> latest_cutoffs(const corpus::DatasetSplit& split) {
  std::map<std::string, corpus::Timestamp> out;
  for (const auto& [user, ts] : train_cutoffs(split)) {
    auto [it, fresh] = out.emplace(user, ts);
    if (!fresh) it->second = std::max(it->second, ts);
  }
  return out;
}

template <typename Fn>
void for_each_train_history(const corpus::Corpus& corpus, const corpus::DatasetSplit& split, Fn&& fn) {
  const auto cutoffs = train_cutoffs(split);
  for (const auto& rec : corpus.students()) {
    for (auto it = cutoffs.lower_bound({rec.user_id, std::numeric_limits<corpus::Timestamp>::min()});
         it != cutoffs.end() && it->first == rec.user_id; ++it) {
      if (!embed::history_before(rec, it->second).empty()) fn(rec, it->second);
    }
  }
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
}

void write_curve(const std::filesystem::path& path, const embed::AutoencoderReport& r) {
  std::string body = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < r.val_loss.size(); ++e)
    body += std::to_string(e) + ',' + (e ? format_double(r.train_loss[e - 1]) : std::string()) + ',' +
            format_double(r.val_loss[e]) + '\n';
  body += "# mean_input_norm=" + format_double(r.mean_input_norm) +
          " mean_discrepancy_norm=" + format_double(r.mean_discrepancy_norm) + '\n';
  write_text(path, body);
}

void write_curve(const std::filesystem::path& path, const text::PretrainReport& r) {
  std::string body = "epoch,loss\n";
  for (std::size_t e = 0; e < r.loss_curve.size(); ++e) body += std::to_string(e) + ',' + format_double(r.loss_curve[e]) + '\n';
  write_text(path, body);
}

}  // namespace

const std::vector<std::string>& template_texts() {
  static const std::vector<std::string> texts{"Q: A: CORRECT WRONG , [SEP]"};
  return texts;
}

std::vector<std::string> mlm_texts(const corpus::Corpus& corpus, const std::vector<std::string>& documents) {
  std::vector<std::string> out;
  for (const auto& q : corpus.questions()) out.push_back(q.text);
  for (const auto& q : corpus.questions())
    for (const auto& c : q.choices) out.push_back(c.text);
  out.insert(out.end(), documents.begin(), documents.end());
  return out;
}

text::Vocab build_vocab(const corpus::Corpus& corpus, const std::vector<std::string>& documents, std::size_t min_freq) {
  auto texts = mlm_texts(corpus, documents);
  // Template words must survive any min_freq.
  for (std::size_t i = 0; i < std::max<std::size_t>(min_freq, 1); ++i)
    texts.insert(texts.end(), template_texts().begin(), template_texts().end());
  return text::Vocab::build(texts, min_freq);
}

std::set<std::pair<std::string, corpus::Timestamp>> train_cutoffs(const corpus::DatasetSplit& split) {
  std::set<std::pair<std::string, corpus::Timestamp>> out;
  for (const auto& x : split.train)
    if (x.user_id) out.emplace(*x.user_id, x.history_cutoff);
  return out;
}

std::vector<std::string> clm_texts(const corpus::Corpus& corpus, const corpus::DatasetSplit& split,
                                   std::size_t seq_len) {
  const auto latest = latest_cutoffs(split);
  std::vector<std::string> out;
  for (const auto& rec : corpus.students()) {
    auto it = latest.find(rec.user_id);
    if (it == latest.end() || embed::history_before(rec, it->second).empty()) continue;
    out.push_back(embed::serialize_history(rec, it->second, seq_len, corpus));
  }
  return out;
}

std::vector<std::vector<double>> mlp_samples(const corpus::Corpus& corpus, const embed::FeatureSchema& schema,
                                             const corpus::DatasetSplit& split) {
  std::vector<std::vector<double>> out;
  for_each_train_history(corpus, split, [&](const corpus::StudentRecord& rec, corpus::Timestamp cutoff) {
    out.push_back(embed::history_feature_vector(rec, cutoff, schema));
  });
  return out;
}

std::vector<std::vector<double>> lstm_samples(const corpus::Corpus& corpus, const embed::FeatureSchema& schema,
                                              const corpus::DatasetSplit& split, std::size_t seq_len) {
  std::vector<std::vector<double>> out;
  for_each_train_history(corpus, split, [&](const corpus::StudentRecord& rec, corpus::Timestamp cutoff) {
    out.push_back(embed::interaction_rows(rec, cutoff, seq_len, schema));
  });
  return out;
}

std::uint64_t split_fingerprint(const corpus::DatasetSplit& split) {
  std::uint64_t h = fnv1a64(corpus::to_string(split.policy));
  for (const auto& x : split.train) {
    h = fnv1a64(x.user_id.value_or("-"), h);
    h = fnv1a64(x.question_id, h);
    h = fnv1a64(x.choice_id, h);
    h = fnv1a64(std::to_string(x.history_cutoff), h);
  }
  return h;
}

EmbeddingFactory::EmbeddingFactory(std::shared_ptr<const corpus::Corpus> corpus,
                                   std::shared_ptr<const text::Vocab> vocab, std::shared_ptr<const text::MaskedLm> mlm,
                                   EmbedderTraining training)
    : training_(std::move(training)) {
  artifacts_.bank = std::move(corpus);
  artifacts_.vocab = std::move(vocab);
  artifacts_.mlm = std::move(mlm);
  artifacts_.schema = std::make_shared<embed::FeatureSchema>(*artifacts_.bank);
  training_.decoder.vocab_size = artifacts_.vocab->size();
}

void EmbeddingFactory::bind_cache(std::uint64_t split_key) const {
  if (cache_dir_.empty()) return;
  std::filesystem::create_directories(cache_dir_);
  const auto stamp = cache_dir_ / "split.txt";
  const std::string want = hex64(split_key) + '\n';
  if (std::filesystem::exists(stamp)) {
    std::ifstream in(stamp, std::ios::binary);
    const std::string have((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (have != want)
      throw CompatibilityError("embedding cache '" + cache_dir_.string() + "' belongs to another split");
  } else {
    write_text(stamp, want);
  }
}

void EmbeddingFactory::ensure(const embed::EmbedderConfig& cfg, const corpus::DatasetSplit& split) {
  const std::uint64_t key = split_fingerprint(split);
  if (key != split_key_) {
    artifacts_.mlp.clear();
    artifacts_.lstm.clear();
    artifacts_.clm.reset();
    ae_reports_.clear();
    clm_report_ = {};
    split_key_ = key;
  }
  bind_cache(key);
  const bool cached = !cache_dir_.empty();
  const auto& corpus = *artifacts_.bank;
  const auto& schema = *artifacts_.schema;
  const std::string id = cfg.id();
  const std::uint64_t seed = derive_seed(training_.seed, fnv1a64(id));
  auto ae_cfg = training_.autoencoder;
  ae_cfg.seed = derive_seed(seed, 1);
  switch (cfg.family) {
    case embed::Family::mlp_ae:
      if (!artifacts_.mlp.count(id)) {
        const auto path = cache_dir_ / (id + ".ckpt");
        if (cached && std::filesystem::exists(path)) {
          artifacts_.mlp[id] = std::make_shared<embed::MlpAutoencoder>(embed::MlpAutoencoder::load(path));
          break;
        }
        auto ae = std::make_shared<embed::MlpAutoencoder>(schema.width(), training_.mlp_hidden, cfg.dim, seed);
        ae_reports_[id] = embed::train_autoencoder(*ae, mlp_samples(corpus, schema, split), ae_cfg);
        if (cached) {
          write_curve(cache_dir_ / (id + "_loss.csv"), ae_reports_[id]);
          ae->save(path);
        }
        artifacts_.mlp[id] = ae;
      }
      break;
    case embed::Family::lstm_ae:
      if (!artifacts_.lstm.count(id)) {
        const auto path = cache_dir_ / (id + ".ckpt");
        if (cached && std::filesystem::exists(path)) {
          artifacts_.lstm[id] = std::make_shared<embed::LstmAutoencoder>(embed::LstmAutoencoder::load(path));
          break;
        }
        auto ae = std::make_shared<embed::LstmAutoencoder>(schema.row_width(), cfg.seq_len, cfg.lstm_layers, cfg.dim,
                                                           seed);
        ae_reports_[id] = embed::train_autoencoder(*ae, lstm_samples(corpus, schema, split, cfg.seq_len), ae_cfg);
        if (cached) {
          write_curve(cache_dir_ / (id + "_loss.csv"), ae_reports_[id]);
          ae->save(path);
        }
        artifacts_.lstm[id] = ae;
      }
      break;
    case embed::Family::encoder_pool:
      if (!artifacts_.mlm) throw DependencyError("embedder '" + id + "' needs the masked-LM encoder");
      break;
    case embed::Family::clm_pool:
      if (!artifacts_.clm) {
        const auto path = cache_dir_ / "clm.ckpt";
        if (cached && std::filesystem::exists(path)) {
          artifacts_.clm = std::make_shared<text::CausalLm>(text::load_causal_lm(path, *artifacts_.vocab));
          break;
        }
        // One LM for every clm_pool length, trained on the longest window.
        std::size_t longest = 0;
        for (const auto& c : embed::registry())
          if (c.family == embed::Family::clm_pool) longest = std::max(longest, c.seq_len);
        auto lm = std::make_shared<text::CausalLm>(training_.decoder, derive_seed(training_.seed, 2));
        auto clm_cfg = training_.clm;
        clm_cfg.seed = derive_seed(training_.seed, 3);
        clm_report_ = text::clm_pretrain(*lm, *artifacts_.vocab, clm_texts(corpus, split, longest), clm_cfg);
        if (cached) {
          write_curve(cache_dir_ / "clm_loss.csv", clm_report_);
          text::save_lm(path, *lm, *artifacts_.vocab);
        }
        artifacts_.clm = lm;
      }
      break;
  }
}

void EmbeddingFactory::prepare(const std::string& config_id, const corpus::DatasetSplit& split) {
  ensure(embed::find_config(config_id), split);
}

embed::EmbeddingTable EmbeddingFactory::operator()(const std::string& config_id, const corpus::DatasetSplit& split) {
  const auto cfg = embed::find_config(config_id);
  ensure(cfg, split);
  return embed::compute_embedding_table(*embed::make_embedder(cfg, artifacts_), *artifacts_.bank);
}

}  // namespace mcqf::pipeline
