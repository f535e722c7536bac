#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kite/model/config.hpp"
#include "kite/tensor/ops.hpp"
#include "kite/tensor/parameter.hpp"

namespace kite::model {

using ad::ParameterSet;
using ad::Tensor;

// Training switches dropout and batch statistics on; rng feeds dropout.
struct Mode {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

// x [N x in] -> [N x out]; weight stored [in x out].
template <class Real>
struct Linear {
  Tensor<Real> weight;
  Tensor<Real> bias;

  Linear() = default;
  // Uniform(+-1/sqrt(in)) for weight and bias.
  Linear(ParameterSet<Real>& ps, const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng,
         bool zero_bias = false);
  Tensor<Real> operator()(const Tensor<Real>& x) const;
};

template <class Real>
struct LayerNorm {
  Tensor<Real> gain;
  Tensor<Real> bias;

  LayerNorm() = default;
  LayerNorm(ParameterSet<Real>& ps, const std::string& name, std::size_t dim);
  Tensor<Real> operator()(const Tensor<Real>& x) const;
};

// Over axis 1 of [B x C] or [B x C x L].
template <class Real>
struct BatchNorm {
  Tensor<Real> gain;
  Tensor<Real> bias;
  Tensor<Real> running_mean;
  Tensor<Real> running_var;

  BatchNorm() = default;
  BatchNorm(ParameterSet<Real>& ps, const std::string& name, std::size_t channels);
  Tensor<Real> operator()(const Tensor<Real>& x, const Mode& mode);
};

// softmax(Q K^T / sqrt(d_k) restricted to key_mask) V for one head.
// Q [n x d_k], K [m x d_k], V [m x d_v].
template <class Real>
Tensor<Real> scaled_dot_product_attention(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v,
                                          std::span<const std::uint8_t> key_mask);

// Projections are [d_model x d_model]; head i uses columns [i*d_k, (i+1)*d_k).
// Biases start at zero.
template <class Real>
struct MultiHeadAttention {
  std::size_t heads = 1;
  Linear<Real> w_q, w_k, w_v, w_o;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet<Real>& ps, const std::string& name, std::size_t d_model, std::size_t heads,
                     std::mt19937_64& rng);
  // x [B*L x d_model] holding B sequences of length L; key_mask [B*L].
  Tensor<Real> operator()(const Tensor<Real>& x, std::size_t batch, std::size_t len,
                          std::span<const std::uint8_t> key_mask) const;
};

// Post-norm layer: x = LN(x + MHA(x)); x = LN(x + FFN(x)).
template <class Real>
struct EncoderLayer {
  MultiHeadAttention<Real> attn;
  LayerNorm<Real> norm1;
  Linear<Real> ff1, ff2;
  LayerNorm<Real> norm2;
  Real dropout = 0;

  EncoderLayer() = default;
  EncoderLayer(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c, std::mt19937_64& rng);
  Tensor<Real> operator()(const Tensor<Real>& x, std::size_t batch, std::size_t len,
                          std::span<const std::uint8_t> key_mask, const Mode& mode) const;
};

// Token, segment and learned position tables, summed per position.
template <class Real>
struct EmbeddingStack {
  Tensor<Real> token, segment, position;

  EmbeddingStack() = default;
  EmbeddingStack(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c, std::mt19937_64& rng);
  // ids and segments hold B rows of length L -> [B*L x d_model].
  Tensor<Real> operator()(std::span<const std::int32_t> ids, std::span<const std::int32_t> segments,
                          std::size_t batch, std::size_t len) const;
};

template <class Real>
struct Encoder {
  std::vector<EncoderLayer<Real>> layers;

  Encoder() = default;
  Encoder(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c, std::mt19937_64& rng);
  Tensor<Real> operator()(Tensor<Real> x, std::size_t batch, std::size_t len, std::span<const std::uint8_t> key_mask,
                          const Mode& mode) const;
};

// conv -> BN -> relu -> conv -> BN with a residual around it, then max-pool.
template <class Real>
struct ConvBlock {
  Tensor<Real> w1, b1, w2, b2;
  BatchNorm<Real> bn1, bn2;
  std::size_t pool_stride = 2;

  ConvBlock() = default;
  ConvBlock(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c, std::mt19937_64& rng);
  Tensor<Real> operator()(const Tensor<Real>& x, const Mode& mode);
};

template <class Real>
struct ConvModule {
  std::vector<ConvBlock<Real>> blocks;

  ConvModule() = default;
  ConvModule(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c, std::mt19937_64& rng);
  // h [B*L x C] -> [B x C * final_len], channel-major.
  Tensor<Real> operator()(const Tensor<Real>& h, std::size_t batch, std::size_t len, const Mode& mode);
};

// linear -> BN -> leaky relu -> linear.
template <class Real>
struct Mlp {
  Linear<Real> fc1;
  BatchNorm<Real> bn;
  Linear<Real> fc2;

  Mlp() = default;
  Mlp(ParameterSet<Real>& ps, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out,
      std::mt19937_64& rng);
  Tensor<Real> operator()(const Tensor<Real>& x, const Mode& mode);
};

// The pair vector is read as two tokens of kg_dim / 2; one attention layer
// with residual and layer norm, flattened back.
template <class Real>
struct KgAttention {
  MultiHeadAttention<Real> attn;
  LayerNorm<Real> norm;
  std::size_t token_dim = 0;

  KgAttention() = default;
  KgAttention(ParameterSet<Real>& ps, const std::string& name, const ModelConfig& c, std::mt19937_64& rng);
  // pair [B x kg_dim] -> [B x kg_dim]
  Tensor<Real> operator()(const Tensor<Real>& pair) const;
};

}  // namespace kite::model
