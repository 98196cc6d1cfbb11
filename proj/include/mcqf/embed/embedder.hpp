#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mcqf/embed/autoencoder.hpp"
#include "mcqf/embed/history.hpp"
#include "mcqf/embed/registry.hpp"
#include "mcqf/text/encoder.hpp"

namespace mcqf::embed {

struct StudentEmbedding {
  std::string user_id;
  Timestamp as_of = 0;
  std::vector<double> vector;
  std::string config_id;

  bool operator==(const StudentEmbedding&) const = default;
};

/// Maps a student's history before a cutoff to a fixed-width vector. Empty
/// histories map to the zero vector for every family. Implementations are
/// immutable after construction, so concurrent calls are safe.
class StudentEmbedder {
 public:
  virtual ~StudentEmbedder() = default;
  virtual const EmbedderConfig& config() const = 0;
  virtual std::size_t dim() const = 0;
  /// One vector per cutoff, in the order given.
  virtual std::vector<std::vector<double>> embed(const corpus::StudentRecord& record,
                                                 std::span<const Timestamp> cutoffs) const = 0;
};

/// Trained models each family depends on. Shared ownership keeps embedders
/// valid independently of the pipeline that built them.
struct EmbeddingArtifacts {
  std::shared_ptr<const corpus::Corpus> bank;
  std::shared_ptr<const FeatureSchema> schema;
  std::shared_ptr<const text::Vocab> vocab;
  std::map<std::string, std::shared_ptr<const MlpAutoencoder>> mlp;    // keyed by config id
  std::map<std::string, std::shared_ptr<const LstmAutoencoder>> lstm;  // keyed by config id
  /// Masked-LM encoder (encoder_pool) and causal LM (clm_pool).
  std::shared_ptr<const text::MaskedLm> mlm;
  std::shared_ptr<const text::CausalLm> clm;
};

/// Throws DependencyError naming the config id when an artifact it needs is
/// absent.
std::unique_ptr<StudentEmbedder> make_embedder(const EmbedderConfig& cfg, const EmbeddingArtifacts& artifacts);

StudentEmbedding compute_student_embedding(const EmbedderConfig& cfg, const EmbeddingArtifacts& artifacts,
                                           const corpus::StudentRecord& record, Timestamp cutoff);

/// Mean of rows [begin, end) of the penultimate-layer (causal LM) or
/// final-layer (encoder) states. Exposed for tests.
std::vector<double> mean_pool(const Tensor& states, std::size_t begin, std::size_t end);

/// Embeddings keyed by (user, cutoff).
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::string config_id, std::size_t dim) : config_id_(std::move(config_id)), dim_(dim) {}

  const std::string& config_id() const { return config_id_; }
  std::size_t dim() const { return dim_; }
  const std::vector<StudentEmbedding>& rows() const { return rows_; }

  /// Throws ShapeError on a width mismatch and ContractError on a duplicate
  /// key.
  void add(StudentEmbedding e);
  bool contains(const std::string& user_id, Timestamp as_of) const;
  /// Throws DependencyError when the embedding was never computed.
  const std::vector<double>& at(const std::string& user_id, Timestamp as_of) const;

 private:
  std::string config_id_;
  std::size_t dim_ = 0;
  std::vector<StudentEmbedding> rows_;
  std::map<std::pair<std::string, Timestamp>, std::size_t> index_;
};

/// Embeds every student at every one of their interaction timestamps,
/// students in corpus order and cutoffs chronologically.
EmbeddingTable compute_embedding_table(const StudentEmbedder& embedder, const corpus::Corpus& corpus);

/// Rows projected onto their first two principal components (centred, signs
/// fixed so the largest-magnitude loading of each axis is positive).
std::vector<std::array<double, 2>> principal_projection(const std::vector<std::vector<double>>& rows);

/// Writes `csv` with header user_id,as_of,config_id,v0..v{E-1} and
/// `projection_csv` with user_id,as_of,config_id,x,y. I/O failures raise
/// std::runtime_error naming the path.
void export_embeddings(const EmbeddingTable& table, const std::filesystem::path& csv,
                       const std::filesystem::path& projection_csv);

}  // namespace mcqf::embed
