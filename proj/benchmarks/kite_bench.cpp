#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "kite/datasets/synthetic.hpp"
#include "kite/model/kite_model.hpp"
#include "kite/model/layers.hpp"
#include "kite/smiles/smiles.hpp"
#include "kite/smiles/tokenizer.hpp"
#include "kite/tensor/ops.hpp"

namespace {

using kite::ad::Tensor;

Tensor<float> random_tensor(kite::ad::Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0, 1);
  std::vector<float> v(kite::ad::numel(shape));
  for (auto& x : v) x = n(rng);
  return Tensor<float>::from_values(std::move(shape), std::move(v));
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  auto a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  kite::ad::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(kite::ad::matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(512);

void BM_Attention(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const std::size_t dk = 32;
  std::mt19937_64 rng(2);
  auto q = random_tensor({len, dk}, rng), k = random_tensor({len, dk}, rng), v = random_tensor({len, dk}, rng);
  std::vector<std::uint8_t> mask(len, 1);
  kite::ad::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(kite::model::scaled_dot_product_attention(q, k, v, mask));
}
BENCHMARK(BM_Attention)->Arg(128)->Arg(500);

void BM_RandomizeSmiles(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<kite::smiles::MolecularGraph> graphs;
  for (int i = 0; i < 64; ++i) graphs.push_back(kite::datasets::random_molecule(rng, 20, 40));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(kite::smiles::randomize_smiles(graphs[i++ % graphs.size()], rng));
}
BENCHMARK(BM_RandomizeSmiles);

void BM_EncoderForward(benchmark::State& state) {
  kite::model::ModelConfig c;
  c.vocab_size = 40;
  c.n_classes = 8;
  c.max_len = static_cast<std::size_t>(state.range(0));
  c.n_layers = 2;
  kite::model::MlmModel<float> m(c, 0);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::int32_t> tok(4, 39);
  std::vector<kite::smiles::TokenSequence> seqs(4);
  for (auto& s : seqs) {
    for (std::size_t i = 0; i < c.max_len; ++i) {
      s.ids.push_back(tok(rng));
      s.segments.push_back(i < c.max_len / 2 ? 0 : 1);
      s.attention_mask.push_back(1);
    }
    s.untruncated_length = c.max_len;
  }
  const auto batch = kite::model::make_batch<float>(seqs, {}, c.kg_dim);
  kite::ad::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(m.encode(batch, {}));
}
BENCHMARK(BM_EncoderForward)->Arg(128)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
