#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mcqf/core/ops.hpp"

namespace mcqf {

/// Named, ordered parameter collection (e.g. "encoder.block0.attn.wq").
/// Entries are shared handles: modules and the store alias the same tensors.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t numel() const;

  /// Adds every entry of `other` (aliasing its tensors).
  void merge(const ParamStore& other);
  /// Independent deep copy with identical names and values.
  ParamStore clone() const;
  /// Copies values from `other` for every name in this store.
  void copy_values_from(const ParamStore& other);
  void zero_grad();
  void set_requires_grad(bool flag);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct InitConfig {
  double stddev = 0.02;
};

struct Linear {
  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, bool with_bias, Rng& rng,
         InitConfig init = {});
  Tensor forward(const Tensor& x) const { return linear(x, weight, bias); }

  Tensor weight;  // [in x out]
  Tensor bias;    // [out], undefined when bias-free
  std::size_t in = 0;
  std::size_t out = 0;
};

struct LayerNorm {
  LayerNorm() = default;
  LayerNorm(ParamStore& ps, const std::string& name, std::size_t width);
  Tensor forward(const Tensor& x) const { return layer_norm(x, gamma, beta); }

  Tensor gamma;
  Tensor beta;
};

struct FeedForward {
  FeedForward() = default;
  FeedForward(ParamStore& ps, const std::string& name, std::size_t width, std::size_t hidden, Rng& rng);
  Tensor forward(const Tensor& x) const { return down.forward(gelu(up.forward(x))); }

  Linear up;
  Linear down;
};

struct MultiHeadAttention {
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& ps, const std::string& name, std::size_t width, std::size_t heads, Rng& rng);
  /// x is packed [batch*seq x width].
  Tensor forward(const Tensor& x, const AttentionShape& shape, std::span<const std::size_t> valid_len) const;

  Linear wq, wk, wv, wo;
  std::size_t heads = 1;
};

/// Post-norm encoder block: x = LN(x + Attn(x)); x = LN(x + FFN(x)).
struct TransformerBlock {
  TransformerBlock() = default;
  TransformerBlock(ParamStore& ps, const std::string& name, std::size_t width, std::size_t heads,
                   std::size_t ffn, Rng& rng);
  /// `drop` is applied to both sublayer outputs when `rng` is non-null.
  Tensor forward(const Tensor& x, const AttentionShape& shape, std::span<const std::size_t> valid_len,
                 double drop, Rng* rng) const;

  MultiHeadAttention attn;
  LayerNorm ln1;
  FeedForward ffn;
  LayerNorm ln2;
};

/// Single LSTM layer with gate order (input, forget, cell, output).
struct LstmLayer {
  LstmLayer() = default;
  LstmLayer(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);
  /// steps[t] is [batch x in]; returns the hidden state after every step.
  std::vector<Tensor> forward(const std::vector<Tensor>& steps) const;

  Linear input;      // in -> 4*hidden, with bias
  Linear recurrent;  // hidden -> 4*hidden, bias-free
  std::size_t hidden = 0;
};

/// Stack of LSTM layers; returns the top layer's states.
struct Lstm {
  Lstm() = default;
  Lstm(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hidden, std::size_t layers, Rng& rng);
  std::vector<Tensor> forward(const std::vector<Tensor>& steps) const;

  std::vector<LstmLayer> layers;
};

}  // namespace mcqf
