#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "kite/model/layers.hpp"
#include "kite/smiles/vocab.hpp"

namespace kite::model {

// B encoded pairs of equal length plus their B x kg_dim pair vectors.
template <class Real>
struct Batch {
  std::size_t size = 0;
  std::size_t len = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> segments;
  std::vector<std::uint8_t> mask;
  Tensor<Real> kg;
};

// An empty `kg` gives zero pair vectors.
template <class Real>
Batch<Real> make_batch(std::span<const smiles::TokenSequence> seqs, std::span<const std::vector<float>> kg,
                       std::size_t kg_dim);

// logits = MLP2(concat(MLP1(conv(encoder(embed(x)))), kg_attention(pair)))
template <class Real>
class KiteModel {
 public:
  KiteModel(const ModelConfig& config, std::uint64_t seed);
  KiteModel(const KiteModel&) = delete;
  KiteModel& operator=(const KiteModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterSet<Real>& parameters() { return params_; }
  const ParameterSet<Real>& parameters() const { return params_; }

  // [B*L x d_model]
  Tensor<Real> encode(const Batch<Real>& batch, const Mode& mode) const;
  // [B x n_classes]
  Tensor<Real> forward(const Batch<Real>& batch, const Mode& mode);

 private:
  ModelConfig config_;
  ParameterSet<Real> params_;
  std::mt19937_64 init_rng_;

 public:
  EmbeddingStack<Real> embed;
  Encoder<Real> encoder;
  ConvModule<Real> conv;
  Mlp<Real> mlp1;
  KgAttention<Real> kg;
  Mlp<Real> mlp2;
};

// Embedding stack and encoder shared in layout with KiteModel, plus a token
// prediction head: linear -> relu -> layer norm -> linear to the vocabulary.
template <class Real>
class MlmModel {
 public:
  MlmModel(const ModelConfig& config, std::uint64_t seed);
  MlmModel(const MlmModel&) = delete;
  MlmModel& operator=(const MlmModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterSet<Real>& parameters() { return params_; }
  const ParameterSet<Real>& parameters() const { return params_; }

  Tensor<Real> encode(const Batch<Real>& batch, const Mode& mode) const;
  // Vocabulary logits [P x V] at flat positions (b * len + i) of the batch.
  Tensor<Real> predict(const Batch<Real>& batch, std::span<const std::int32_t> positions, const Mode& mode) const;

 private:
  ModelConfig config_;
  ParameterSet<Real> params_;
  std::mt19937_64 init_rng_;

 public:
  EmbeddingStack<Real> embed;
  Encoder<Real> encoder;
  Linear<Real> head_dense;
  LayerNorm<Real> head_norm;
  Linear<Real> head_out;
};

// Copies every tensor whose name starts with one of `prefixes` and exists in
// both sets; shapes must agree. Returns the number copied.
template <class Real>
std::size_t copy_tensors(const ParameterSet<Real>& from, ParameterSet<Real>& to,
                         const std::vector<std::string>& prefixes);

// Embedding stack and encoder weights from a pretrained MLM model.
template <class Real>
std::size_t transfer_encoder(const MlmModel<Real>& from, KiteModel<Real>& to) {
  return copy_tensors(from.parameters(), to.parameters(), {"embed.", "encoder."});
}

}  // namespace kite::model
