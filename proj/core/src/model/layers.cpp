#include "kite/model/layers.hpp"

#include <cmath>

namespace kite::model {
namespace {

template <class Real>
Tensor<Real> uniform(ad::Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<Real> v(ad::numel(shape));
  for (auto& x : v) x = static_cast<Real>(u(rng));
  return Tensor<Real>::from_values(std::move(shape), std::move(v));
}

template <class Real>
Tensor<Real> normal(ad::Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Real> v(ad::numel(shape));
  for (auto& x : v) x = static_cast<Real>(n(rng));
  return Tensor<Real>::from_values(std::move(shape), std::move(v));
}

// [B*L x H*dk] -> [B*H x L x dk]
template <class Real>
Tensor<Real> split_heads(const Tensor<Real>& x, std::size_t batch, std::size_t len, std::size_t heads) {
  const std::size_t dk = x.dim(1) / heads;
  if (heads == 1) return ad::reshape(x, {batch, len, dk});
  auto t = ad::transpose(ad::reshape(x, {batch, len, heads, dk}), 1, 2);
  return ad::reshape(t, {batch * heads, len, dk});
}

// [B*H x L x dk] -> [B*L x H*dk]
template <class Real>
Tensor<Real> merge_heads(const Tensor<Real>& x, std::size_t batch, std::size_t len, std::size_t heads) {
  const std::size_t dk = x.dim(2);
  if (heads == 1) return ad::reshape(x, {batch * len, dk});
  auto t = ad::transpose(ad::reshape(x, {batch, heads, len, dk}), 1, 2);
  return ad::reshape(t, {batch * len, heads * dk});
}

}  // namespace

template <class Real>
Linear<Real>::Linear(ParameterSet<Real>& ps, const std::string& name, std::size_t in, std::size_t out,
                     std::mt19937_64& rng, bool zero_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = uniform<Real>({in, out}, bound, rng);
  bias = zero_bias ? Tensor<Real>::zeros({out}) : uniform<Real>({out}, bound, rng);
  ps.add(name + ".weight", weight);
  ps.add(name + ".bias", bias);
}

template <class Real>
Tensor<Real> Linear<Real>::operator()(const Tensor<Real>& x) const {
  return ad::add(ad::matmul(x, weight), bias);
}

template <class Real>
LayerNorm<Real>::LayerNorm(ParameterSet<Real>& ps, const std::string& name, std::size_t dim)
    : gain(Tensor<Real>::full({dim}, Real(1))), bias(Tensor<Real>::zeros({dim})) {
  ps.add(name + ".gain", gain);
  ps.add(name + ".bias", bias);
}

template <class Real>
Tensor<Real> LayerNorm<Real>::operator()(const Tensor<Real>& x) const {
  return ad::layer_norm(x, gain, bias);
}

template <class Real>
BatchNorm<Real>::BatchNorm(ParameterSet<Real>& ps, const std::string& name, std::size_t channels)
    : gain(Tensor<Real>::full({channels}, Real(1))),
      bias(Tensor<Real>::zeros({channels})),
      running_mean(Tensor<Real>::zeros({channels})),
      running_var(Tensor<Real>::full({channels}, Real(1))) {
  ps.add(name + ".gain", gain);
  ps.add(name + ".bias", bias);
  ps.add_buffer(name + ".running_mean", running_mean);
  ps.add_buffer(name + ".running_var", running_var);
}

template <class Real>
Tensor<Real> BatchNorm<Real>::operator()(const Tensor<Real>& x, const Mode& mode) {
  return ad::batch_norm(x, gain, bias, running_mean, running_var, mode.training);
}

template <class Real>
Tensor<Real> scaled_dot_product_attention(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v,
                                          std::span<const std::uint8_t> key_mask) {
  const Real inv = Real(1) / std::sqrt(static_cast<Real>(q.dim(1)));
  auto scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv);
  return ad::matmul(ad::masked_softmax(scores, key_mask), v);
}

template <class Real>
MultiHeadAttention<Real>::MultiHeadAttention(ParameterSet<Real>& ps, const std::string& name, std::size_t d_model,
                                             std::size_t h, std::mt19937_64& rng)
    : heads(h),
      w_q(ps, name + ".w_q", d_model, d_model, rng, true),
      w_k(ps, name + ".w_k", d_model, d_model, rng, true),
      w_v(ps, name + ".w_v", d_model, d_model, rng, true),
      w_o(ps, name + ".w_o", d_model, d_model, rng, true) {}

template <class Real>
Tensor<Real> MultiHeadAttention<Real>::operator()(const Tensor<Real>& x, std::size_t batch, std::size_t len,
                                                  std::span<const std::uint8_t> key_mask) const {
  auto q = split_heads(w_q(x), batch, len, heads);
  auto k = split_heads(w_k(x), batch, len, heads);
  auto v = split_heads(w_v(x), batch, len, heads);
  const Real inv = Real(1) / std::sqrt(static_cast<Real>(q.dim(2)));
  auto weights = ad::masked_softmax(ad::scale(ad::bmm(q, k, true), inv), key_mask);
  return w_o(merge_heads(ad::bmm(weights, v), batch, len, heads));
}

template <class Real>
EncoderLayer<Real>::EncoderLayer(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c,
                                 std::mt19937_64& rng)
    : attn(ps, name + ".attn", c.d_model, c.n_heads, rng),
      norm1(ps, name + ".norm1", c.d_model),
      ff1(ps, name + ".ff1", c.d_model, c.d_ff, rng),
      ff2(ps, name + ".ff2", c.d_ff, c.d_model, rng),
      norm2(ps, name + ".norm2", c.d_model),
      dropout(static_cast<Real>(c.dropout)) {}

template <class Real>
Tensor<Real> EncoderLayer<Real>::operator()(const Tensor<Real>& x, std::size_t batch, std::size_t len,
                                            std::span<const std::uint8_t> key_mask, const Mode& mode) const {
  auto drop = [&](const Tensor<Real>& t) {
    return mode.training && mode.rng && dropout > 0 ? ad::dropout(t, dropout, *mode.rng) : t;
  };
  auto h = norm1(ad::add(x, drop(attn(x, batch, len, key_mask))));
  return norm2(ad::add(h, drop(ff2(ad::relu(ff1(h))))));
}

template <class Real>
EmbeddingStack<Real>::EmbeddingStack(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c,
                                     std::mt19937_64& rng)
    : token(normal<Real>({c.vocab_size, c.d_model}, rng)),
      segment(normal<Real>({c.n_segments, c.d_model}, rng)),
      position(normal<Real>({c.max_len, c.d_model}, rng)) {
  ps.add(name + ".token", token);
  ps.add(name + ".segment", segment);
  ps.add(name + ".position", position);
}

template <class Real>
Tensor<Real> EmbeddingStack<Real>::operator()(std::span<const std::int32_t> ids, std::span<const std::int32_t> segments,
                                              std::size_t batch, std::size_t len) const {
  if (ids.size() != batch * len || segments.size() != batch * len) {
    throw ShapeError("embedding: expected " + std::to_string(batch * len) + " ids and segments");
  }
  if (len > position.dim(0)) {
    throw IndexError("embedding: sequence length " + std::to_string(len) + " exceeds max_len " +
                     std::to_string(position.dim(0)));
  }
  std::vector<std::int32_t> pos(batch * len);
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<std::int32_t>(i % len);
  auto sum = ad::add(ad::embedding_lookup(token, ids), ad::embedding_lookup(segment, segments));
  return ad::add(sum, ad::embedding_lookup(position, std::span<const std::int32_t>(pos)));
}

template <class Real>
Encoder<Real>::Encoder(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < c.n_layers; ++i) layers.emplace_back(ps, name + "." + std::to_string(i), c, rng);
}

template <class Real>
Tensor<Real> Encoder<Real>::operator()(Tensor<Real> x, std::size_t batch, std::size_t len,
                                       std::span<const std::uint8_t> key_mask, const Mode& mode) const {
  for (const auto& layer : layers) x = layer(x, batch, len, key_mask, mode);
  return x;
}

template <class Real>
ConvBlock<Real>::ConvBlock(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c,
                           std::mt19937_64& rng)
    : pool_stride(c.pool_stride) {
  const std::size_t ch = c.d_model, k = c.conv_kernel;
  const double bound = 1.0 / std::sqrt(static_cast<double>(ch * k));
  w1 = uniform<Real>({ch, ch, k}, bound, rng);
  b1 = uniform<Real>({ch}, bound, rng);
  bn1 = BatchNorm<Real>(ps, name + ".bn1", ch);
  w2 = uniform<Real>({ch, ch, k}, bound, rng);
  b2 = uniform<Real>({ch}, bound, rng);
  bn2 = BatchNorm<Real>(ps, name + ".bn2", ch);
  ps.add(name + ".conv1.weight", w1);
  ps.add(name + ".conv1.bias", b1);
  ps.add(name + ".conv2.weight", w2);
  ps.add(name + ".conv2.bias", b2);
}

template <class Real>
Tensor<Real> ConvBlock<Real>::operator()(const Tensor<Real>& x, const Mode& mode) {
  auto h = ad::relu(bn1(ad::conv1d(x, w1, b1), mode));
  h = bn2(ad::conv1d(h, w2, b2), mode);
  return ad::max_pool1d(ad::add(x, h), 2, pool_stride);
}

template <class Real>
ConvModule<Real>::ConvModule(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c,
                             std::mt19937_64& rng) {
  for (std::size_t i = 0; i < c.conv_blocks; ++i) blocks.emplace_back(ps, name + "." + std::to_string(i), c, rng);
}

template <class Real>
Tensor<Real> ConvModule<Real>::operator()(const Tensor<Real>& h, std::size_t batch, std::size_t len,
                                          const Mode& mode) {
  const std::size_t ch = h.dim(1);
  auto x = ad::transpose(ad::reshape(h, {batch, len, ch}), 1, 2);
  for (auto& b : blocks) x = b(x, mode);
  return ad::reshape(x, {batch, x.dim(1) * x.dim(2)});
}

template <class Real>
Mlp<Real>::Mlp(ParameterSet<Real>& ps, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out,
               std::mt19937_64& rng)
    : fc1(ps, name + ".fc1", in, hidden, rng), bn(ps, name + ".bn", hidden), fc2(ps, name + ".fc2", hidden, out, rng) {}

template <class Real>
Tensor<Real> Mlp<Real>::operator()(const Tensor<Real>& x, const Mode& mode) {
  return fc2(ad::leaky_relu(bn(fc1(x), mode)));
}

template <class Real>
KgAttention<Real>::KgAttention(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c,
                               std::mt19937_64& rng)
    : attn(ps, name + ".attn", c.kg_dim / 2, c.kg_heads, rng),
      norm(ps, name + ".norm", c.kg_dim / 2),
      token_dim(c.kg_dim / 2) {}

template <class Real>
Tensor<Real> KgAttention<Real>::operator()(const Tensor<Real>& pair) const {
  const std::size_t batch = pair.dim(0);
  auto tokens = ad::reshape(pair, {batch * 2, token_dim});
  const std::vector<std::uint8_t> mask(batch * 2, 1);
  auto out = norm(ad::add(tokens, attn(tokens, batch, 2, mask)));
  return ad::reshape(out, {batch, 2 * token_dim});
}

#define KITE_INSTANTIATE_LAYERS(Real)                                                                    \
  template struct Linear<Real>;                                                                          \
  template struct LayerNorm<Real>;                                                                       \
  template struct BatchNorm<Real>;                                                                       \
  template struct MultiHeadAttention<Real>;                                                              \
  template struct EncoderLayer<Real>;                                                                    \
  template struct EmbeddingStack<Real>;                                                                  \
  template struct Encoder<Real>;                                                                         \
  template struct ConvBlock<Real>;                                                                       \
  template struct ConvModule<Real>;                                                                      \
  template struct Mlp<Real>;                                                                             \
  template struct KgAttention<Real>;                                                                     \
  template Tensor<Real> scaled_dot_product_attention(const Tensor<Real>&, const Tensor<Real>&,          \
                                                     const Tensor<Real>&, std::span<const std::uint8_t>);

KITE_INSTANTIATE_LAYERS(float)
KITE_INSTANTIATE_LAYERS(double)

#undef KITE_INSTANTIATE_LAYERS

}  // namespace kite::model
