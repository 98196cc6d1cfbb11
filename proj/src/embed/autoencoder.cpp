#include "mcqf/embed/autoencoder.hpp"

#include <cmath>

#include "mcqf/core/checkpoint.hpp"
#include "mcqf/core/errors.hpp"
#include "mcqf/core/optim.hpp"

namespace mcqf::embed {

namespace {

std::size_t meta_size(const Checkpoint& ck, const std::string& key, const std::filesystem::path& path) {
  const std::string v = ck.meta(key);
  if (v.empty()) throw CompatibilityError(path.string() + ": checkpoint lacks '" + key + "'");
  return static_cast<std::size_t>(std::stoull(v));
}

void expect_kind(const Checkpoint& ck, const std::string& kind, const std::filesystem::path& path) {
  if (ck.meta("kind") != kind) {
    throw CompatibilityError(path.string() + ": expected a " + kind + " checkpoint, found '" + ck.meta("kind") + "'");
  }
}

Tensor rows_tensor(const std::vector<std::vector<double>>& samples, const std::vector<std::size_t>& idx,
                   std::size_t width) {
  std::vector<double> flat;
  flat.reserve(idx.size() * width);
  for (auto i : idx) flat.insert(flat.end(), samples[i].begin(), samples[i].end());
  return Tensor(Shape{idx.size(), width}, std::move(flat));
}

std::vector<std::vector<std::size_t>> chunks(const std::vector<std::size_t>& order, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += size)
    out.emplace_back(order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(std::min(order.size(), i + size)));
  return out;
}

template <class Model>
double mean_loss(const Model& m, const std::vector<std::vector<double>>& samples, const std::vector<std::size_t>& idx,
                 std::size_t width, std::size_t batch) {
  if (idx.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : chunks(idx, batch)) {
    Tensor x = rows_tensor(samples, c, width);
    total += mse_loss(m.reconstruct(x), x).item() * static_cast<double>(c.size());
  }
  return total / static_cast<double>(idx.size());
}

template <class Model>
AutoencoderReport train_impl(Model& model, const std::vector<std::vector<double>>& samples, std::size_t width,
                             const AutoencoderTrainConfig& cfg) {
  if (samples.empty()) throw ContractError("autoencoder training needs a non-empty sample set");
  for (const auto& s : samples)
    if (s.size() != width) {
      throw ContractError("autoencoder sample width " + std::to_string(s.size()) + " != model width " +
                          std::to_string(width));
    }
  if (cfg.batch_size == 0) throw ConfigError("autoencoder.batch_size must be positive");
  if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0)) throw ConfigError("autoencoder.val_fraction must lie in [0, 1)");

  Rng split_rng(derive_seed(cfg.seed, 1));
  auto order = permutation(samples.size(), split_rng);
  std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(samples.size())));
  if (cfg.val_fraction > 0.0 && n_val == 0 && samples.size() >= 2) n_val = 1;
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<long>(n_val), order.end());
  if (val.empty()) val = train;

  AutoencoderReport report;
  report.val_loss.push_back(mean_loss(model, samples, val, width, cfg.batch_size));
  Adam opt(model.params, AdamConfig{cfg.lr});
  Rng rng(derive_seed(cfg.seed, 2));
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> shuffled(train.size());
    const auto perm = permutation(train.size(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = train[perm[i]];
    double total = 0.0;
    std::size_t batches = 0;
    for (const auto& c : chunks(shuffled, cfg.batch_size)) {
      Tensor x = rows_tensor(samples, c, width);
      total += train_step(opt, [&] { return mse_loss(model.reconstruct(x), x); }, cfg.clip_norm);
      ++batches;
    }
    report.train_loss.push_back(batches ? total / static_cast<double>(batches) : 0.0);
    report.val_loss.push_back(mean_loss(model, samples, val, width, cfg.batch_size));
  }

  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  double in_norm = 0.0, diff_norm = 0.0;
  for (const auto& c : chunks(all, cfg.batch_size)) {
    Tensor x = rows_tensor(samples, c, width);
    Tensor y = model.reconstruct(x);
    for (std::size_t r = 0; r < c.size(); ++r) {
      double a = 0.0, d = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        const double v = x(r, j);
        a += v * v;
        d += (v - y(r, j)) * (v - y(r, j));
      }
      in_norm += std::sqrt(a);
      diff_norm += std::sqrt(d);
    }
  }
  report.mean_input_norm = in_norm / static_cast<double>(samples.size());
  report.mean_discrepancy_norm = diff_norm / static_cast<double>(samples.size());
  return report;
}

}  // namespace

MlpAutoencoder::MlpAutoencoder(std::size_t in, std::size_t hidden, std::size_t dim, std::uint64_t seed)
    : in_(in), hidden_(hidden), dim_(dim) {
  if (dim == 0 || hidden == 0) throw ConfigError("mlp_ae widths must be positive");
  if (dim >= in) {
    throw ConfigError("mlp_ae bottleneck must compress: dim " + std::to_string(dim) + " >= input width " +
                      std::to_string(in));
  }
  Rng rng(seed);
  const InitConfig init{1.0 / std::sqrt(static_cast<double>(hidden))};
  enc1_ = Linear(params, "mlp_ae.enc1", in, hidden, true, rng, init);
  enc2_ = Linear(params, "mlp_ae.enc2", hidden, dim, true, rng, init);
  dec1_ = Linear(params, "mlp_ae.dec1", dim, hidden, true, rng, init);
  dec2_ = Linear(params, "mlp_ae.dec2", hidden, in, true, rng, init);
}

Tensor MlpAutoencoder::encode(const Tensor& x) const { return enc2_.forward(relu(enc1_.forward(x))); }

Tensor MlpAutoencoder::reconstruct(const Tensor& x) const {
  return dec2_.forward(relu(dec1_.forward(encode(x))));
}

void MlpAutoencoder::save(const std::filesystem::path& path) const {
  save_checkpoint(path, params,
                  {{"kind", "mlp_ae"}, {"in", std::to_string(in_)}, {"hidden", std::to_string(hidden_)},
                   {"dim", std::to_string(dim_)}});
}

MlpAutoencoder MlpAutoencoder::load(const std::filesystem::path& path) {
  auto ck = load_checkpoint(path);
  expect_kind(ck, "mlp_ae", path);
  MlpAutoencoder m(meta_size(ck, "in", path), meta_size(ck, "hidden", path), meta_size(ck, "dim", path), 0);
  restore_params(ck, m.params);
  return m;
}

LstmAutoencoder::LstmAutoencoder(std::size_t row_width, std::size_t seq_len, std::size_t layers, std::size_t dim,
                                 std::uint64_t seed)
    : row_width_(row_width), seq_len_(seq_len), layers_(layers), dim_(dim) {
  if (row_width == 0 || seq_len == 0 || layers == 0 || dim == 0) throw ConfigError("lstm_ae sizes must be positive");
  if (dim >= seq_len * row_width) {
    throw ConfigError("lstm_ae bottleneck must compress: dim " + std::to_string(dim) + " >= input width " +
                      std::to_string(seq_len * row_width));
  }
  Rng rng(seed);
  encoder_ = Lstm(params, "lstm_ae.encoder", row_width, dim, layers, rng);
  decoder_ = Lstm(params, "lstm_ae.decoder", dim, dim, layers, rng);
  out_ = Linear(params, "lstm_ae.out", dim, row_width, true, rng, InitConfig{1.0 / std::sqrt(static_cast<double>(dim))});
}

std::vector<Tensor> LstmAutoencoder::steps(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != seq_len_ * row_width_) {
    throw ShapeError("lstm_ae input must be [batch x " + std::to_string(seq_len_ * row_width_) + "], got " +
                     shape_str(x.shape()));
  }
  std::vector<Tensor> out;
  for (std::size_t t = 0; t < seq_len_; ++t) out.push_back(slice_cols(x, t * row_width_, (t + 1) * row_width_));
  return out;
}

Tensor LstmAutoencoder::encode(const Tensor& x) const { return encoder_.forward(steps(x)).back(); }

Tensor LstmAutoencoder::reconstruct(const Tensor& x) const {
  Tensor z = encode(x);
  const std::vector<Tensor> repeated(seq_len_, z);
  const auto states = decoder_.forward(repeated);
  Tensor out = out_.forward(states[0]);
  for (std::size_t t = 1; t < seq_len_; ++t) out = concat_cols(out, out_.forward(states[t]));
  return out;
}

void LstmAutoencoder::save(const std::filesystem::path& path) const {
  save_checkpoint(path, params,
                  {{"kind", "lstm_ae"},
                   {"row_width", std::to_string(row_width_)},
                   {"seq_len", std::to_string(seq_len_)},
                   {"layers", std::to_string(layers_)},
                   {"dim", std::to_string(dim_)}});
}

LstmAutoencoder LstmAutoencoder::load(const std::filesystem::path& path) {
  auto ck = load_checkpoint(path);
  expect_kind(ck, "lstm_ae", path);
  LstmAutoencoder m(meta_size(ck, "row_width", path), meta_size(ck, "seq_len", path), meta_size(ck, "layers", path),
                    meta_size(ck, "dim", path), 0);
  restore_params(ck, m.params);
  return m;
}

AutoencoderReport train_autoencoder(MlpAutoencoder& model, const std::vector<std::vector<double>>& samples,
                                    const AutoencoderTrainConfig& cfg) {
  return train_impl(model, samples, model.in(), cfg);
}

AutoencoderReport train_autoencoder(LstmAutoencoder& model, const std::vector<std::vector<double>>& samples,
                                    const AutoencoderTrainConfig& cfg) {
  return train_impl(model, samples, model.seq_len() * model.row_width(), cfg);
}

}  // namespace mcqf::embed
