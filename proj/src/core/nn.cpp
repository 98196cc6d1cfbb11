#include "mcqf/core/nn.hpp"

#include <cmath>

#include "mcqf/core/errors.hpp"

namespace mcqf {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  if (contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  t.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::move(t));
  return entries_.back().second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

std::size_t ParamStore::numel() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.numel();
  return n;
}

void ParamStore::merge(const ParamStore& other) {
  for (const auto& [name, t] : other.entries_) add(name, t);
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto& [name, t] : entries_) out.add(name, t.clone());
  return out;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  for (auto& [name, t] : entries_) {
    const Tensor& src = other.at(name);
    if (src.shape() != t.shape()) {
      throw ShapeError("parameter '" + name + "' has shape " + shape_str(t.shape()) + ", source has " +
                       shape_str(src.shape()));
    }
    t.storage() = src.storage();
  }
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

void ParamStore::set_requires_grad(bool flag) {
  for (auto& [_, t] : entries_) t.set_requires_grad(flag);
}

Linear::Linear(ParamStore& ps, const std::string& name, std::size_t in_, std::size_t out_, bool with_bias,
               Rng& rng, InitConfig init)
    : in(in_), out(out_) {
  Tensor w(Shape{in, out});
  fill_normal(w, 0.0, init.stddev, rng);
  weight = ps.add(name + ".weight", w);
  if (with_bias) bias = ps.add(name + ".bias", Tensor(Shape{out}));
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, std::size_t width) {
  gamma = ps.add(name + ".gamma", Tensor(Shape{width}, 1.0));
  beta = ps.add(name + ".beta", Tensor(Shape{width}, 0.0));
}

FeedForward::FeedForward(ParamStore& ps, const std::string& name, std::size_t width, std::size_t hidden,
                         Rng& rng)
    : up(ps, name + ".up", width, hidden, true, rng), down(ps, name + ".down", hidden, width, true, rng) {}

MultiHeadAttention::MultiHeadAttention(ParamStore& ps, const std::string& name, std::size_t width,
                                       std::size_t heads_, Rng& rng)
    : wq(ps, name + ".wq", width, width, true, rng),
      wk(ps, name + ".wk", width, width, true, rng),
      wv(ps, name + ".wv", width, width, true, rng),
      wo(ps, name + ".wo", width, width, true, rng),
      heads(heads_) {
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("attention width " + std::to_string(width) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

Tensor MultiHeadAttention::forward(const Tensor& x, const AttentionShape& shape,
                                   std::span<const std::size_t> valid_len) const {
  AttentionShape s = shape;
  s.heads = heads;
  Tensor ctx = attention(wq.forward(x), wk.forward(x), wv.forward(x), s, valid_len);
  return wo.forward(ctx);
}

TransformerBlock::TransformerBlock(ParamStore& ps, const std::string& name, std::size_t width,
                                   std::size_t heads, std::size_t ffn_size, Rng& rng)
    : attn(ps, name + ".attn", width, heads, rng),
      ln1(ps, name + ".ln1", width),
      ffn(ps, name + ".ffn", width, ffn_size, rng),
      ln2(ps, name + ".ln2", width) {}

Tensor TransformerBlock::forward(const Tensor& x, const AttentionShape& shape,
                                 std::span<const std::size_t> valid_len, double drop, Rng* rng) const {
  Tensor a = attn.forward(x, shape, valid_len);
  if (rng != nullptr) a = dropout(a, drop, *rng);
  Tensor h = ln1.forward(add(x, a));
  Tensor f = ffn.forward(h);
  if (rng != nullptr) f = dropout(f, drop, *rng);
  return ln2.forward(add(h, f));
}

LstmLayer::LstmLayer(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hidden_, Rng& rng)
    : hidden(hidden_) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  Tensor wx(Shape{in, 4 * hidden});
  Tensor wh(Shape{hidden, 4 * hidden});
  fill_uniform(wx, -bound, bound, rng);
  fill_uniform(wh, -bound, bound, rng);
  input.in = in;
  input.out = 4 * hidden;
  input.weight = ps.add(name + ".wx", wx);
  Tensor b(Shape{4 * hidden});
  // forget gate starts open
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b.data()[j] = 1.0;
  input.bias = ps.add(name + ".bias", b);
  recurrent.in = hidden;
  recurrent.out = 4 * hidden;
  recurrent.weight = ps.add(name + ".wh", wh);
}

std::vector<Tensor> LstmLayer::forward(const std::vector<Tensor>& steps) const {
  std::vector<Tensor> out;
  if (steps.empty()) return out;
  const std::size_t batch = steps.front().rows();
  Tensor h(Shape{batch, hidden});
  Tensor c(Shape{batch, hidden});
  out.reserve(steps.size());
  for (const auto& x : steps) {
    Tensor gates = add(input.forward(x), recurrent.forward(h));
    Tensor i = sigmoid(slice_cols(gates, 0, hidden));
    Tensor f = sigmoid(slice_cols(gates, hidden, 2 * hidden));
    Tensor g = tanh(slice_cols(gates, 2 * hidden, 3 * hidden));
    Tensor o = sigmoid(slice_cols(gates, 3 * hidden, 4 * hidden));
    c = add(mul(f, c), mul(i, g));
    h = mul(o, tanh(c));
    out.push_back(h);
  }
  return out;
}

Lstm::Lstm(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hidden, std::size_t n_layers,
           Rng& rng) {
  if (n_layers == 0) throw ConfigError("LSTM needs at least one layer");
  for (std::size_t l = 0; l < n_layers; ++l) {
    layers.emplace_back(ps, name + ".layer" + std::to_string(l), l == 0 ? in : hidden, hidden, rng);
  }
}

std::vector<Tensor> Lstm::forward(const std::vector<Tensor>& steps) const {
  std::vector<Tensor> cur = steps;
  for (const auto& layer : layers) cur = layer.forward(cur);
  return cur;
}

}  // namespace mcqf
