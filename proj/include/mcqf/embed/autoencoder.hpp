#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mcqf/core/nn.hpp"

namespace mcqf::embed {

struct AutoencoderTrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double clip_norm = 1.0;
  double val_fraction = 0.1;
  std::uint64_t seed = 5;
};

struct AutoencoderReport {
  std::vector<double> train_loss;  // mean batch loss per epoch
  /// Validation MSE before training (index 0) and after every epoch.
  std::vector<double> val_loss;
  /// Reconstruction diagnostics over every sample after training.
  double mean_input_norm = 0.0;
  double mean_discrepancy_norm = 0.0;
};

/// F -> hidden -> E encoder (ReLU between) with a mirrored decoder.
class MlpAutoencoder {
 public:
  MlpAutoencoder() = default;
  /// Throws ConfigError unless dim < in.
  MlpAutoencoder(std::size_t in, std::size_t hidden, std::size_t dim, std::uint64_t seed);

  std::size_t in() const { return in_; }
  std::size_t dim() const { return dim_; }
  /// x is [batch x in].
  Tensor encode(const Tensor& x) const;
  Tensor reconstruct(const Tensor& x) const;

  void save(const std::filesystem::path& path) const;
  static MlpAutoencoder load(const std::filesystem::path& path);

  ParamStore params;

 private:
  std::size_t in_ = 0, hidden_ = 0, dim_ = 0;
  Linear enc1_, enc2_, dec1_, dec2_;
};

/// Sequence autoencoder: a stacked LSTM encodes [seq_len x row_width] rows,
/// the top layer's final hidden state is the embedding, and a decoder LSTM
/// fed that embedding at every step reconstructs the rows.
class LstmAutoencoder {
 public:
  LstmAutoencoder() = default;
  /// Throws ConfigError unless dim < seq_len * row_width.
  LstmAutoencoder(std::size_t row_width, std::size_t seq_len, std::size_t layers, std::size_t dim,
                  std::uint64_t seed);

  std::size_t row_width() const { return row_width_; }
  std::size_t seq_len() const { return seq_len_; }
  std::size_t layers() const { return layers_; }
  std::size_t dim() const { return dim_; }
  /// x is [batch x seq_len*row_width], each row one flattened sequence.
  Tensor encode(const Tensor& x) const;
  Tensor reconstruct(const Tensor& x) const;

  void save(const std::filesystem::path& path) const;
  static LstmAutoencoder load(const std::filesystem::path& path);

  ParamStore params;

 private:
  std::vector<Tensor> steps(const Tensor& x) const;

  std::size_t row_width_ = 0, seq_len_ = 0, layers_ = 0, dim_ = 0;
  Lstm encoder_, decoder_;
  Linear out_;
};

/// Trains with MSE reconstruction loss on `samples` (each of the model's
/// input width), holding out val_fraction for the validation curve. Throws
/// ContractError for an empty or ragged sample set.
AutoencoderReport train_autoencoder(MlpAutoencoder& model, const std::vector<std::vector<double>>& samples,
                                    const AutoencoderTrainConfig& cfg);
AutoencoderReport train_autoencoder(LstmAutoencoder& model, const std::vector<std::vector<double>>& samples,
                                    const AutoencoderTrainConfig& cfg);

}  // namespace mcqf::embed
