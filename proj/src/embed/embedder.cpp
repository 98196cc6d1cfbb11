#include "mcqf/embed/embedder.hpp"

#include <Eigen/Dense>
#include <exception>
#include <fstream>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/format.hpp"

namespace mcqf::embed {

namespace {

std::vector<double> row_of(const Tensor& t, std::size_t r) {
  auto d = t.data().subspan(r * t.cols(), t.cols());
  return {d.begin(), d.end()};
}

/// Shared shape of the autoencoder embedders: featurize non-empty histories,
/// encode them as one batch, leave zeros for empty ones.
template <class Model, class Featurize>
std::vector<std::vector<double>> encode_histories(const Model& model, std::size_t width, const corpus::StudentRecord& record,
                                                  std::span<const Timestamp> cutoffs, Featurize featurize) {
  std::vector<std::vector<double>> out(cutoffs.size(), std::vector<double>(model.dim(), 0.0));
  std::vector<std::size_t> slots;
  std::vector<double> flat;
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    if (history_before(record, cutoffs[i]).empty()) continue;
    auto f = featurize(cutoffs[i]);
    flat.insert(flat.end(), f.begin(), f.end());
    slots.push_back(i);
  }
  if (slots.empty()) return out;
  Tensor z = model.encode(Tensor(Shape{slots.size(), width}, std::move(flat)));
  for (std::size_t k = 0; k < slots.size(); ++k) out[slots[k]] = row_of(z, k);
  return out;
}

class MlpEmbedder final : public StudentEmbedder {
 public:
  MlpEmbedder(EmbedderConfig cfg, std::shared_ptr<const MlpAutoencoder> ae, std::shared_ptr<const FeatureSchema> schema)
      : cfg_(cfg), ae_(std::move(ae)), schema_(std::move(schema)) {
    if (ae_->in() != schema_->width()) {
      throw CompatibilityError(cfg_.id() + ": autoencoder input width " + std::to_string(ae_->in()) +
                               " does not match feature width " + std::to_string(schema_->width()));
    }
  }
  const EmbedderConfig& config() const override { return cfg_; }
  std::size_t dim() const override { return ae_->dim(); }
  std::vector<std::vector<double>> embed(const corpus::StudentRecord& record,
                                         std::span<const Timestamp> cutoffs) const override {
    return encode_histories(*ae_, schema_->width(), record, cutoffs,
                            [&](Timestamp t) { return history_feature_vector(record, t, *schema_); });
  }

 private:
  EmbedderConfig cfg_;
  std::shared_ptr<const MlpAutoencoder> ae_;
  std::shared_ptr<const FeatureSchema> schema_;
};

class LstmEmbedder final : public StudentEmbedder {
 public:
  LstmEmbedder(EmbedderConfig cfg, std::shared_ptr<const LstmAutoencoder> ae, std::shared_ptr<const FeatureSchema> schema)
      : cfg_(cfg), ae_(std::move(ae)), schema_(std::move(schema)) {
    if (ae_->row_width() != schema_->row_width() || ae_->seq_len() != cfg_.seq_len) {
      throw CompatibilityError(cfg_.id() + ": autoencoder shape does not match the sequence schema");
    }
  }
  const EmbedderConfig& config() const override { return cfg_; }
  std::size_t dim() const override { return ae_->dim(); }
  std::vector<std::vector<double>> embed(const corpus::StudentRecord& record,
                                         std::span<const Timestamp> cutoffs) const override {
    return encode_histories(*ae_, cfg_.seq_len * schema_->row_width(), record, cutoffs,
                            [&](Timestamp t) { return interaction_rows(record, t, cfg_.seq_len, *schema_); });
  }

 private:
  EmbedderConfig cfg_;
  std::shared_ptr<const LstmAutoencoder> ae_;
  std::shared_ptr<const FeatureSchema> schema_;
};

// Final-layer mean over every non-pad token of the serialized history.
class EncoderPoolEmbedder final : public StudentEmbedder {
 public:
  EncoderPoolEmbedder(EmbedderConfig cfg, std::shared_ptr<const text::MaskedLm> mlm,
                      std::shared_ptr<const text::Vocab> vocab, std::shared_ptr<const corpus::Corpus> bank)
      : cfg_(cfg), mlm_(std::move(mlm)), vocab_(std::move(vocab)), bank_(std::move(bank)) {}
  const EmbedderConfig& config() const override { return cfg_; }
  std::size_t dim() const override { return mlm_->encoder.config().hidden; }
  std::vector<std::vector<double>> embed(const corpus::StudentRecord& record,
                                         std::span<const Timestamp> cutoffs) const override {
    std::vector<std::vector<double>> out(cutoffs.size(), std::vector<double>(dim(), 0.0));
    std::vector<std::size_t> slots;
    std::vector<text::TokenSequence> seqs;
    const std::size_t max_len = mlm_->encoder.config().max_positions;
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
      const std::string txt = serialize_history(record, cutoffs[i], cfg_.seq_len, *bank_);
      if (txt.empty()) continue;
      seqs.push_back(text::encode_single(txt, *vocab_, max_len));
      slots.push_back(i);
    }
    if (slots.empty()) return out;
    const auto batch = text::TokenBatch::pack(seqs);
    Tensor h = mlm_->encoder.forward(batch);
    for (std::size_t k = 0; k < slots.size(); ++k)
      out[slots[k]] = mean_pool(h, k * batch.seq, k * batch.seq + batch.valid[k]);
    return out;
  }

 private:
  EmbedderConfig cfg_;
  std::shared_ptr<const text::MaskedLm> mlm_;
  std::shared_ptr<const text::Vocab> vocab_;
  std::shared_ptr<const corpus::Corpus> bank_;
};

// Penultimate-layer mean over the history tokens, excluding the leading
// [CLS] start token. Cutoffs whose texts share a window start are prefixes of
// one another, so under the causal mask the longest text's states serve all.
class ClmPoolEmbedder final : public StudentEmbedder {
 public:
  ClmPoolEmbedder(EmbedderConfig cfg, std::shared_ptr<const text::CausalLm> clm,
                  std::shared_ptr<const text::Vocab> vocab, std::shared_ptr<const corpus::Corpus> bank)
      : cfg_(cfg), clm_(std::move(clm)), vocab_(std::move(vocab)), bank_(std::move(bank)) {}
  const EmbedderConfig& config() const override { return cfg_; }
  std::size_t dim() const override { return clm_->decoder.config().hidden; }
  std::vector<std::vector<double>> embed(const corpus::StudentRecord& record,
                                         std::span<const Timestamp> cutoffs) const override {
    std::vector<std::vector<double>> out(cutoffs.size(), std::vector<double>(dim(), 0.0));
    const std::size_t max_len = clm_->decoder.config().max_positions;

    struct Item {
      std::size_t slot;
      std::size_t window_start;
      std::size_t history_len;
      std::string text;
    };
    std::vector<Item> items;
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
      const std::size_t n = history_before(record, cutoffs[i]).size();
      if (n == 0) continue;
      const std::size_t start = n - std::min(n, cfg_.seq_len);
      items.push_back({i, start, n, serialize_history(record, cutoffs[i], cfg_.seq_len, *bank_)});
    }
    std::map<std::size_t, std::vector<const Item*>> groups;
    for (const auto& it : items) groups[it.window_start].push_back(&it);

    for (const auto& [start, members] : groups) {
      const Item* longest = *std::max_element(members.begin(), members.end(),
                                              [](const Item* a, const Item* b) { return a->history_len < b->history_len; });
      const auto full = text::encode_causal(longest->text, *vocab_, max_len);
      const bool fits = text::tokenize(longest->text).size() + 1 <= max_len;
      if (fits) {
        const Tensor states = penultimate(full);
        for (const Item* m : members) {
          const std::size_t n_tok = text::tokenize(m->text).size() + 1;
          out[m->slot] = mean_pool(states, 1, n_tok);
        }
      } else {
        for (const Item* m : members) {
          const auto seq = text::encode_causal(m->text, *vocab_, max_len);
          out[m->slot] = mean_pool(penultimate(seq), 1, seq.valid_length());
        }
      }
    }
    return out;
  }

 private:
  Tensor penultimate(const text::TokenSequence& seq) const {
    const auto layers = clm_->layers(text::TokenBatch::pack(std::vector<text::TokenSequence>{seq}));
    return layers[layers.size() - 2];
  }

  EmbedderConfig cfg_;
  std::shared_ptr<const text::CausalLm> clm_;
  std::shared_ptr<const text::Vocab> vocab_;
  std::shared_ptr<const corpus::Corpus> bank_;
};

template <class T>
const T& require(const std::shared_ptr<T>& p, const EmbedderConfig& cfg, const char* what) {
  if (!p) throw DependencyError("embedder '" + cfg.id() + "' requires " + what + ", which is not available");
  return *p;
}

void csv_field(std::ostream& os, const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    os << s;
    return;
  }
  os << '"';
  for (char c : s) {
    if (c == '"') os << '"';
    os << c;
  }
  os << '"';
}

}  // namespace

std::vector<double> mean_pool(const Tensor& states, std::size_t begin, std::size_t end) {
  if (begin >= end || end > states.rows()) {
    throw ContractError("mean_pool range [" + std::to_string(begin) + ", " + std::to_string(end) + ") invalid for " +
                        std::to_string(states.rows()) + " rows");
  }
  const std::size_t h = states.cols();
  std::vector<double> out(h, 0.0);
  for (std::size_t r = begin; r < end; ++r)
    for (std::size_t j = 0; j < h; ++j) out[j] += states(r, j);
  const double n = static_cast<double>(end - begin);
  for (auto& v : out) v /= n;
  return out;
}

std::unique_ptr<StudentEmbedder> make_embedder(const EmbedderConfig& cfg, const EmbeddingArtifacts& a) {
  switch (cfg.family) {
    case Family::mlp_ae: {
      auto it = a.mlp.find(cfg.id());
      if (it == a.mlp.end() || !it->second) throw DependencyError("embedder '" + cfg.id() + "' has no trained autoencoder");
      require(a.schema, cfg, "a feature schema");
      return std::make_unique<MlpEmbedder>(cfg, it->second, a.schema);
    }
    case Family::lstm_ae: {
      auto it = a.lstm.find(cfg.id());
      if (it == a.lstm.end() || !it->second) throw DependencyError("embedder '" + cfg.id() + "' has no trained autoencoder");
      require(a.schema, cfg, "a feature schema");
      return std::make_unique<LstmEmbedder>(cfg, it->second, a.schema);
    }
    case Family::encoder_pool:
      require(a.mlm, cfg, "the masked-LM encoder");
      require(a.vocab, cfg, "a vocabulary");
      require(a.bank, cfg, "the question bank");
      return std::make_unique<EncoderPoolEmbedder>(cfg, a.mlm, a.vocab, a.bank);
    case Family::clm_pool:
      require(a.clm, cfg, "the causal LM");
      require(a.vocab, cfg, "a vocabulary");
      require(a.bank, cfg, "the question bank");
      return std::make_unique<ClmPoolEmbedder>(cfg, a.clm, a.vocab, a.bank);
  }
  throw ContractError("unknown embedder family");
}

StudentEmbedding compute_student_embedding(const EmbedderConfig& cfg, const EmbeddingArtifacts& artifacts,
                                           const corpus::StudentRecord& record, Timestamp cutoff) {
  auto e = make_embedder(cfg, artifacts);
  const Timestamp ts[] = {cutoff};
  return {record.user_id, cutoff, e->embed(record, ts).front(), cfg.id()};
}

void EmbeddingTable::add(StudentEmbedding e) {
  if (e.vector.size() != dim_) {
    throw ShapeError("embedding width " + std::to_string(e.vector.size()) + " != table width " + std::to_string(dim_));
  }
  auto key = std::make_pair(e.user_id, e.as_of);
  if (index_.count(key)) {
    throw ContractError("duplicate embedding for user '" + e.user_id + "' at " + std::to_string(e.as_of));
  }
  index_.emplace(std::move(key), rows_.size());
  rows_.push_back(std::move(e));
}

bool EmbeddingTable::contains(const std::string& user_id, Timestamp as_of) const {
  return index_.count({user_id, as_of}) != 0;
}

const std::vector<double>& EmbeddingTable::at(const std::string& user_id, Timestamp as_of) const {
  auto it = index_.find({user_id, as_of});
  if (it == index_.end()) {
    throw DependencyError("embedder '" + config_id_ + "' has no embedding for user '" + user_id + "' at " +
                          std::to_string(as_of));
  }
  return rows_[it->second].vector;
}

EmbeddingTable compute_embedding_table(const StudentEmbedder& embedder, const corpus::Corpus& corpus) {
  const auto& students = corpus.students();
  std::vector<std::vector<std::vector<double>>> per_student(students.size());
  // Pure per-student work into preallocated slots keeps the result
  // independent of scheduling. Exceptions cannot cross the parallel region.
  std::vector<std::exception_ptr> errors(students.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t s = 0; s < students.size(); ++s) {
    try {
      std::vector<Timestamp> cutoffs;
      for (const auto& in : students[s].interactions) cutoffs.push_back(in.timestamp);
      cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
      per_student[s] = embedder.embed(students[s], cutoffs);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  EmbeddingTable table(embedder.config().id(), embedder.dim());
  for (std::size_t s = 0; s < students.size(); ++s) {
    std::vector<Timestamp> cutoffs;
    for (const auto& in : students[s].interactions) cutoffs.push_back(in.timestamp);
    cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
    for (std::size_t k = 0; k < cutoffs.size(); ++k)
      table.add({students[s].user_id, cutoffs[k], std::move(per_student[s][k]), table.config_id()});
  }
  return table;
}

std::vector<std::array<double, 2>> principal_projection(const std::vector<std::vector<double>>& rows) {
  std::vector<std::array<double, 2>> out(rows.size(), {0.0, 0.0});
  if (rows.empty()) return out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = (x.transpose() * x) / std::max<double>(1.0, static_cast<double>(n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // eigenvalues ascend; take the last two columns
  for (int axis = 0; axis < 2 && axis < d; ++axis) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - axis);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    const Eigen::VectorXd p = x * v;
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)] = p(i);
  }
  return out;
}

void export_embeddings(const EmbeddingTable& table, const std::filesystem::path& csv,
                       const std::filesystem::path& projection_csv) {
  auto open = [](const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
  };
  {
    auto os = open(csv);
    os << "user_id,as_of,config_id";
    for (std::size_t j = 0; j < table.dim(); ++j) os << ",v" << j;
    os << '\n';
    for (const auto& r : table.rows()) {
      csv_field(os, r.user_id);
      os << ',' << r.as_of << ',';
      csv_field(os, r.config_id);
      for (double v : r.vector) os << ',' << format_double(v);
      os << '\n';
    }
    if (!os) throw std::runtime_error("failed writing " + csv.string());
  }
  std::vector<std::vector<double>> vecs;
  vecs.reserve(table.rows().size());
  for (const auto& r : table.rows()) vecs.push_back(r.vector);
  const auto proj = principal_projection(vecs);
  auto os = open(projection_csv);
  os << "user_id,as_of,config_id,x,y\n";
  for (std::size_t i = 0; i < proj.size(); ++i) {
    const auto& r = table.rows()[i];
    csv_field(os, r.user_id);
    os << ',' << r.as_of << ',';
    csv_field(os, r.config_id);
    os << ',' << format_double(proj[i][0]) << ',' << format_double(proj[i][1]) << '\n';
  }
  if (!os) throw std::runtime_error("failed writing " + projection_csv.string());
}

}  // namespace mcqf::embed
