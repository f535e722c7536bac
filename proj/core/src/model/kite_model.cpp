#include "kite/model/kite_model.hpp"

#include <algorithm>

namespace kite::model {

template <class Real>
Batch<Real> make_batch(std::span<const smiles::TokenSequence> seqs, std::span<const std::vector<float>> kg,
                       std::size_t kg_dim) {
  if (seqs.empty()) throw ShapeError("batch: no sequences");
  if (!kg.empty() && kg.size() != seqs.size()) throw ShapeError("batch: one pair vector per sequence expected");
  Batch<Real> b;
  b.size = seqs.size();
  b.len = seqs.front().ids.size();
  std::vector<Real> pair(b.size * kg_dim, Real(0));
  for (std::size_t i = 0; i < b.size; ++i) {
    const auto& s = seqs[i];
    if (s.ids.size() != b.len) throw ShapeError("batch: sequences differ in length");
    b.ids.insert(b.ids.end(), s.ids.begin(), s.ids.end());
    b.segments.insert(b.segments.end(), s.segments.begin(), s.segments.end());
    b.mask.insert(b.mask.end(), s.attention_mask.begin(), s.attention_mask.end());
    if (!kg.empty()) {
      if (kg[i].size() != kg_dim) {
        throw ShapeError("batch: pair vector has " + std::to_string(kg[i].size()) + " values, expected " +
                         std::to_string(kg_dim));
      }
      std::copy(kg[i].begin(), kg[i].end(), pair.begin() + static_cast<std::ptrdiff_t>(i * kg_dim));
    }
  }
  b.kg = Tensor<Real>::from_values({b.size, kg_dim}, std::move(pair));
  return b;
}

template <class Real>
KiteModel<Real>::KiteModel(const ModelConfig& config, std::uint64_t seed)
    : config_((config.validate(), config)),
      init_rng_(seed),
      embed(params_, "embed", config_, init_rng_),
      encoder(params_, "encoder", config_, init_rng_),
      conv(params_, "conv", config_, init_rng_),
      mlp1(params_, "mlp1", config_.conv_features(), config_.mlp1_hidden, config_.mlp1_out, init_rng_),
      kg(params_, "kg", config_, init_rng_),
      mlp2(params_, "mlp2", config_.fused_width(), config_.mlp2_hidden, config_.n_classes, init_rng_) {}

template <class Real>
Tensor<Real> KiteModel<Real>::encode(const Batch<Real>& b, const Mode& mode) const {
  if (b.len != config_.max_len) {
    throw ShapeError("model: sequences must have length " + std::to_string(config_.max_len) + ", got " +
                     std::to_string(b.len));
  }
  return encoder(embed(b.ids, b.segments, b.size, b.len), b.size, b.len, b.mask, mode);
}

template <class Real>
Tensor<Real> KiteModel<Real>::forward(const Batch<Real>& b, const Mode& mode) {
  if (b.kg.dim(1) != config_.kg_dim) throw ShapeError("model: pair vectors must have kg_dim values");
  auto features = mlp1(conv(encode(b, mode), b.size, b.len, mode), mode);
  const std::vector<Tensor<Real>> parts{features, kg(b.kg)};
  return mlp2(ad::concat(std::span<const Tensor<Real>>(parts), 1), mode);
}

template <class Real>
MlmModel<Real>::MlmModel(const ModelConfig& config, std::uint64_t seed)
    : config_((config.validate(), config)),
      init_rng_(seed),
      embed(params_, "embed", config_, init_rng_),
      encoder(params_, "encoder", config_, init_rng_),
      head_dense(params_, "mlm_head.dense", config_.d_model, config_.d_model, init_rng_),
      head_norm(params_, "mlm_head.norm", config_.d_model),
      head_out(params_, "mlm_head.out", config_.d_model, config_.vocab_size, init_rng_, true) {
  // Near-uniform initial predictions: the untrained loss starts at ln(V).
  auto w = head_out.weight;
  for (auto& x : w.mutable_values()) x *= Real(0.5);
}

template <class Real>
Tensor<Real> MlmModel<Real>::encode(const Batch<Real>& b, const Mode& mode) const {
  return encoder(embed(b.ids, b.segments, b.size, b.len), b.size, b.len, b.mask, mode);
}

template <class Real>
Tensor<Real> MlmModel<Real>::predict(const Batch<Real>& b, std::span<const std::int32_t> positions,
                                     const Mode& mode) const {
  auto rows = ad::embedding_lookup(encode(b, mode), positions);
  return head_out(head_norm(ad::relu(head_dense(rows))));
}

template <class Real>
std::size_t copy_tensors(const ParameterSet<Real>& from, ParameterSet<Real>& to,
                         const std::vector<std::string>& prefixes) {
  auto wanted = [&](const std::string& name) {
    return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return name.rfind(p, 0) == 0; });
  };
  std::vector<std::pair<const Tensor<Real>*, Tensor<Real>>> plan;
  for (const auto* list : {&to.params(), &to.buffers()}) {
    for (const auto& p : *list) {
      if (!wanted(p.name)) continue;
      const auto* src = from.find(p.name);
      if (src == nullptr) continue;
      if (src->shape() != p.tensor.shape()) {
        throw ShapeError("transfer: '" + p.name + "' is " + ad::to_string(src->shape()) + " in the source and " +
                         ad::to_string(p.tensor.shape()) + " in the target");
      }
      plan.emplace_back(src, p.tensor);
    }
  }
  for (auto& [src, dst] : plan) {
    auto in = src->values();
    std::copy(in.begin(), in.end(), dst.mutable_values().begin());
  }
  return plan.size();
}

#define KITE_INSTANTIATE_MODEL(Real)                                                                    \
  template Batch<Real> make_batch(std::span<const smiles::TokenSequence>, std::span<const std::vector<float>>, \
                                  std::size_t);                                                         \
  template class KiteModel<Real>;                                                                       \
  template class MlmModel<Real>;                                                                        \
  template std::size_t copy_tensors(const ParameterSet<Real>&, ParameterSet<Real>&, const std::vector<std::string>&);

KITE_INSTANTIATE_MODEL(float)
KITE_INSTANTIATE_MODEL(double)

#undef KITE_INSTANTIATE_MODEL

}  // namespace kite::model
