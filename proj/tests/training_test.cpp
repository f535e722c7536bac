#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "kite/common/error.hpp"
#include "kite/common/text.hpp"
#include "kite/datasets/synthetic.hpp"
#include "kite/smiles/tokenizer.hpp"
#include "kite/training/training.hpp"
#include "model_cases.hpp"

using namespace kite;
using namespace kite::training;

namespace {

smiles::TokenSequence sequence(std::size_t real_a, std::size_t real_b, std::size_t len) {
  smiles::TokenSequence s;
  for (std::size_t i = 0; i < len; ++i) {
    const bool live = i < real_a + 1 + real_b;
    s.ids.push_back(!live ? smiles::kPadId : i == real_a ? smiles::kSepId : 5);
    s.segments.push_back(i <= real_a ? 0 : 1);
    s.attention_mask.push_back(live);
  }
  s.untruncated_length = real_a + 1 + real_b;
  return s;
}

struct Fixture {
  smiles::Vocabulary vocab;
  std::vector<PairExample> examples;
  std::vector<std::vector<std::string>> corpus;
  model::ModelConfig config;
};

Fixture make_fixture(std::size_t drugs, std::size_t events) {
  datasets::SyntheticConfig sc;
  sc.drugs = drugs;
  sc.events = events;
  sc.classes = 3;
  sc.max_atoms = 10;
  auto syn = datasets::make_synthetic(sc);
  Fixture f;
  std::vector<std::string> all;
  std::map<std::string, std::string> smiles_of;
  for (const auto& d : syn.drugs) {
    f.corpus.push_back(smiles::tokenize(d.smiles));
    all.insert(all.end(), f.corpus.back().begin(), f.corpus.back().end());
    smiles_of[d.id] = d.smiles;
  }
  f.vocab = smiles::build_vocab(all);
  for (const auto& e : syn.events) f.examples.push_back({smiles_of[e.drug_a], smiles_of[e.drug_b], e.label, {}});
  f.config = test::micro_config();
  f.config.vocab_size = f.vocab.size();
  f.config.max_len = 48;
  f.config.n_classes = 3;
  return f;
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST(PretrainPairs, TwoElementCorpusAlwaysPairsTheOther) {
  std::mt19937_64 rng(0);
  for (int t = 0; t < 50; ++t) {
    auto p = pretrain_partners(2, rng);
    EXPECT_EQ(p[0], 1u);
    EXPECT_EQ(p[1], 0u);
  }
  EXPECT_THROW(pretrain_partners(1, rng), DataError);
}

TEST(PretrainPairs, PartnersUniformOverOthers) {
  std::mt19937_64 rng(1);
  const std::size_t n = 5, trials = 5000;
  std::vector<double> counts(n, 0);
  for (std::size_t t = 0; t < trials; ++t) counts[pretrain_partners(n, rng)[2]] += 1;
  EXPECT_EQ(counts[2], 0.0);
  double chi2 = 0;
  const double expect = static_cast<double>(trials) / (n - 1);
  for (std::size_t j = 0; j < n; ++j)
    if (j != 2) chi2 += (counts[j] - expect) * (counts[j] - expect) / expect;
  EXPECT_LT(chi2, 16.27);  // 3 degrees of freedom, p = 0.001
}

TEST(PretrainPairs, OnePairPerCorpusElement) {
  auto f = make_fixture(12, 10);
  std::mt19937_64 rng(2);
  auto pairs = make_pretrain_pairs(f.corpus, f.vocab, 64, rng);
  ASSERT_EQ(pairs.size(), f.corpus.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(pairs[i].ids[0], f.vocab.id(f.corpus[i][0]));
    EXPECT_EQ(pairs[i].ids.size(), 64u);
  }
}

TEST(Masking, CountRule) {
  for (std::size_t n = 1; n <= 600; ++n) {
    const double exact = 0.15 * static_cast<double>(n);
    const auto want = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact + 0.5)));
    EXPECT_EQ(mask_count(n, 0.15), want) << n;
  }
}

TEST(Masking, ExamplesAndExclusions) {
  std::mt19937_64 rng(3);
  auto s = sequence(60, 40, 120);
  auto masked = s;
  auto plan = mask_sequence(masked, 0.15, rng);
  EXPECT_EQ(plan.positions.size(), 15u);
  for (std::size_t k = 0; k < plan.positions.size(); ++k) {
    EXPECT_EQ(masked.ids[plan.positions[k]], smiles::kMaskId);
    EXPECT_EQ(plan.originals[k], s.ids[plan.positions[k]]);
  }
  auto tiny = sequence(2, 1, 8);
  EXPECT_EQ(mask_sequence(tiny, 0.15, rng).positions.size(), 1u);
  for (int t = 0; t < 1000; ++t) {
    auto x = sequence(3, 4, 12);
    for (auto p : mask_sequence(x, 0.15, rng).positions) {
      EXPECT_NE(p, 3u);  // SEP
      EXPECT_LT(p, 8u);  // PAD starts at 8
    }
  }
}

TEST(MlmLoss, GradientVanishesAtUnmaskedPositions) {
  auto c = test::micro_config();
  model::MlmModel<double> m(c, 1);
  std::mt19937_64 rng(4);
  auto b = test::random_batch<double>(c, 2, rng);
  auto rows = m.encode(b, {});
  auto logits = m.head_out(m.head_norm(ad::relu(m.head_dense(rows))));
  const std::vector<std::int32_t> positions{1, 9}, targets{5, 6};
  auto picked = ad::embedding_lookup(logits, std::span<const std::int32_t>(positions));
  ad::backward(ad::cross_entropy_loss(picked, std::span<const std::int32_t>(targets)));
  const auto g = logits.grad();
  for (std::size_t r = 0; r < logits.dim(0); ++r) {
    double norm = 0;
    for (std::size_t j = 0; j < c.vocab_size; ++j) norm += std::abs(g[r * c.vocab_size + j]);
    if (r == 1 || r == 9) EXPECT_GT(norm, 0.0);
    else EXPECT_EQ(norm, 0.0) << r;
  }
}

TEST(MlmLoss, PerfectPredictionIsNearZeroAndUntrainedNearLogV) {
  const std::vector<std::int32_t> t{2, 0};
  auto sure = ad::Tensor<double>::from_values({2, 3}, {-40, -40, 40, 40, -40, -40});
  EXPECT_LT(ad::cross_entropy_loss(sure, std::span<const std::int32_t>(t)).item(), 1e-12);

  auto f = make_fixture(30, 10);
  model::MlmModel<float> m(f.config, 0);
  std::mt19937_64 rng(5);
  auto pairs = make_pretrain_pairs(f.corpus, f.vocab, f.config.max_len, rng);
  std::vector<MaskingPlan> plans;
  for (auto& p : pairs) plans.push_back(mask_sequence(p, 0.15, rng));
  const double loss = mlm_loss(m, pairs, plans, 8);
  EXPECT_NEAR(loss, std::log(static_cast<double>(f.vocab.size())), 0.1 * std::log(static_cast<double>(f.vocab.size())));
}

TEST(Pretrain, LossDropsAndIsDeterministic) {
  auto f = make_fixture(20, 10);
  PretrainConfig pc;
  pc.epochs = 4;
  pc.lr = 3e-3;
  pc.batch = 4;
  model::MlmModel<float> a(f.config, 0), b(f.config, 0);
  auto ra = mlm_pretrain(a, f.corpus, f.vocab, pc);
  auto rb = mlm_pretrain(b, f.corpus, f.vocab, pc);
  EXPECT_EQ(ra.epoch_losses, rb.epoch_losses);
  EXPECT_LT(ra.epoch_losses.back(), ra.initial_loss);
  auto bad = f.config;
  bad.vocab_size += 1;
  model::MlmModel<float> c(bad, 0);
  EXPECT_THROW(mlm_pretrain(c, f.corpus, f.vocab, pc), ConfigError);
}

TEST(Finetune, FrozenSeedGivesIdenticalCurves) {
  auto f = make_fixture(16, 30);
  FinetuneConfig fc;
  fc.epochs = 3;
  fc.batch = 8;
  fc.lr = 1e-3;
  model::KiteModel<float> a(f.config, 1), b(f.config, 1);
  auto ra = finetune(a, f.examples, {}, f.vocab, fc);
  auto rb = finetune(b, f.examples, {}, f.vocab, fc);
  ASSERT_EQ(ra.history.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(ra.history[e].train_loss, rb.history[e].train_loss);
    EXPECT_EQ(ra.history[e].train_accuracy, rb.history[e].train_accuracy);
  }
  const auto csv = history_csv(ra.history);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_loss,train_accuracy,eval_accuracy");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Finetune, LabelOutOfRangeIsDataError) {
  auto f = make_fixture(16, 30);
  f.examples[3].label = 3;
  model::KiteModel<float> m(f.config, 1);
  FinetuneConfig fc;
  fc.epochs = 1;
  EXPECT_THROW(finetune(m, f.examples, {}, f.vocab, fc), DataError);
}

TEST(Checkpoint, SaveLoadForwardIsBitIdenticalAndEvalReproduces) {
  auto f = make_fixture(16, 30);
  FinetuneConfig fc;
  fc.epochs = 2;
  fc.batch = 8;
  fc.lr = 1e-3;
  std::vector<PairExample> train(f.examples.begin(), f.examples.begin() + 22);
  std::vector<PairExample> eval(f.examples.begin() + 22, f.examples.end());
  model::KiteModel<float> m(f.config, 3);
  auto r = finetune(m, train, eval, f.vocab, fc);
  ad::restore<float>(r.best, m.parameters());
  const auto before = predict(m, eval, f.vocab, 8);
  EXPECT_EQ(before.accuracy, r.best_accuracy);

  const auto path = temp_file("kite_ckpt_test.bin");
  save_model(path, m.parameters(), f.config, "classifier", &r.optimizer, {{"epoch", "1"}});
  auto loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.kind, "classifier");
  EXPECT_EQ(loaded.config, f.config);
  EXPECT_EQ(loaded.record.metadata.at("epoch"), "1");
  model::KiteModel<float> m2(loaded.config, 99);
  ad::restore<float>(loaded.record, m2.parameters());
  const auto after = predict(m2, eval, f.vocab, 8);
  EXPECT_EQ(after.probabilities, before.probabilities);
  EXPECT_EQ(after.accuracy, r.best_accuracy);

  auto bytes = read_file(path);
  bytes[bytes.size() / 2] ^= 0x5a;
  write_file_atomic(path, bytes);
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  std::filesystem::remove(path);
}

TEST(Checkpoint, OptimizerStateRoundTripsToIdenticalNextStep) {
  auto f = make_fixture(16, 30);
  FinetuneConfig fc;
  fc.epochs = 1;
  fc.batch = 8;
  fc.lr = 1e-3;
  model::KiteModel<float> m(f.config, 4);
  auto r = finetune(m, f.examples, {}, f.vocab, fc);
  const auto path = temp_file("kite_ckpt_opt.bin");
  save_model(path, m.parameters(), f.config, "classifier", &r.optimizer);
  auto loaded = load_checkpoint(path);
  model::KiteModel<float> m2(loaded.config, 0);
  ad::restore<float>(loaded.record, m2.parameters());
  auto opt2 = ad::restore_optimizer<float>(*loaded.record.optimizer);
  EXPECT_EQ(opt2.step, r.optimizer.step);

  std::mt19937_64 rng(0);
  std::vector<PairExample> batch(f.examples.begin(), f.examples.begin() + 4);
  auto step = [&](model::KiteModel<float>& model, ad::AdamState<float>& opt) {
    std::vector<smiles::TokenSequence> seqs;
    std::vector<std::int32_t> targets;
    for (const auto& ex : batch) {
      seqs.push_back(smiles::encode_pair(ex.smiles_a, ex.smiles_b, f.vocab, f.config.max_len));
      targets.push_back(ex.label);
    }
    auto b = model::make_batch<float>(seqs, {}, f.config.kg_dim);
    model.parameters().zero_grad();
    ad::backward(ad::cross_entropy_loss(model.forward(b, {}), std::span<const std::int32_t>(targets)));
    ad::adam_step(model.parameters(), opt);
  };
  step(m, r.optimizer);
  step(m2, opt2);
  for (std::size_t i = 0; i < m.parameters().params().size(); ++i) {
    auto a = m.parameters().params()[i].tensor.values();
    auto b = m2.parameters().params()[i].tensor.values();
    ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << m.parameters().params()[i].name;
  }
  std::filesystem::remove(path);
}

TEST(Configs, StrictKeysAndEcho) {
  PretrainConfig p;
  EXPECT_TRUE(p.set("mask_rate", "0.2"));
  EXPECT_FALSE(p.set("masking", "0.2"));
  EXPECT_THROW(p.set("epochs", "-3"), ConfigError);
  p.mask_rate = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
  FinetuneConfig f;
  EXPECT_TRUE(f.set("randomize", "false"));
  EXPECT_FALSE(f.randomize);
  EXPECT_NE(f.to_text().find("weight_decay = 1e-05"), std::string::npos);
}
