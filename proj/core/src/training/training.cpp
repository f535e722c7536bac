#include "kite/training/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "kite/common/config.hpp"
#include "kite/common/error.hpp"
#include "kite/common/text.hpp"
#include "kite/smiles/smiles.hpp"
#include "kite/smiles/tokenizer.hpp"

namespace kite::training {
namespace {

using model::Batch;
using model::Mode;

ad::AdamState<float> make_adam(double lr, double weight_decay) {
  ad::AdamState<float> s;
  s.config.learning_rate = lr;
  s.config.weight_decay = weight_decay;
  return s;
}

// Consecutive [begin, end) ranges of at most `size`; a trailing range of one
// element is folded into the previous range (batch norm needs two samples).
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n; i += size) out.emplace_back(i, std::min(n, i + size));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = n;
    out.pop_back();
  }
  return out;
}

struct MlmStep {
  Batch<float> batch;
  std::vector<std::int32_t> positions;
  std::vector<std::int32_t> targets;
};

MlmStep mlm_step(std::span<const smiles::TokenSequence> seqs, std::span<const MaskingPlan> plans) {
  MlmStep s{model::make_batch<float>(seqs, {}, 1), {}, {}};
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    for (std::size_t k = 0; k < plans[b].positions.size(); ++k) {
      s.positions.push_back(static_cast<std::int32_t>(b * s.batch.len + plans[b].positions[k]));
      s.targets.push_back(plans[b].originals[k]);
    }
  }
  return s;
}

std::int32_t argmax_row(std::span<const float> v, std::size_t row, std::size_t width) {
  const auto* p = v.data() + row * width;
  return static_cast<std::int32_t>(std::max_element(p, p + width) - p);
}

void check_finite(double loss, std::size_t epoch, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw NumericError("loss is not finite at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
  }
}

smiles::TokenSequence encode_example(const PairExample& ex, const smiles::Vocabulary& vocab, std::size_t max_len,
                                     std::mt19937_64* rng) {
  if (rng == nullptr) return smiles::encode_pair(ex.smiles_a, ex.smiles_b, vocab, max_len);
  const auto a = smiles::randomize_smiles(std::string_view(ex.smiles_a), *rng);
  const auto b = smiles::randomize_smiles(std::string_view(ex.smiles_b), *rng);
  return smiles::encode_pair(a, b, vocab, max_len);
}

Batch<float> example_batch(std::span<const PairExample> all, std::span<const std::size_t> pick,
                           const smiles::Vocabulary& vocab, const model::ModelConfig& c, std::mt19937_64* rng) {
  std::vector<smiles::TokenSequence> seqs;
  std::vector<std::vector<float>> kg;
  for (auto i : pick) {
    const auto& ex = all[i];
    seqs.push_back(encode_example(ex, vocab, c.max_len, rng));
    kg.push_back(ex.kg.empty() ? std::vector<float>(c.kg_dim, 0.0f) : ex.kg);
  }
  return model::make_batch<float>(seqs, kg, c.kg_dim);
}

void check_labels(std::span<const PairExample> xs, std::size_t classes) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].label < 0 || static_cast<std::size_t>(xs[i].label) >= classes) {
      throw DataError("example " + std::to_string(i) + " has label " + std::to_string(xs[i].label) +
                      " but the model has " + std::to_string(classes) + " classes");
    }
  }
}

}  // namespace

std::vector<std::size_t> pretrain_partners(std::size_t n, std::mt19937_64& rng) {
  if (n < 2) throw DataError("pretraining corpus needs at least two SMILES");
  std::vector<std::size_t> out(n);
  std::uniform_int_distribution<std::size_t> pick(0, n - 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = pick(rng);
    out[i] = j >= i ? j + 1 : j;
  }
  return out;
}

std::vector<smiles::TokenSequence> make_pretrain_pairs(std::span<const std::vector<std::string>> corpus,
                                                       const smiles::Vocabulary& vocab, std::size_t max_len,
                                                       std::mt19937_64& rng) {
  const auto partner = pretrain_partners(corpus.size(), rng);
  std::vector<smiles::TokenSequence> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.push_back(smiles::encode_pair(corpus[i], corpus[partner[i]], vocab, max_len));
  }
  return out;
}

std::size_t mask_count(std::size_t real, double rate) {
  if (real == 0) return 0;
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(real)));
  return std::min(real, std::max<std::size_t>(1, k));
}

MaskingPlan mask_sequence(smiles::TokenSequence& seq, double rate, std::mt19937_64& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (seq.attention_mask[i] && seq.ids[i] != smiles::kPadId && seq.ids[i] != smiles::kSepId) eligible.push_back(i);
  }
  if (eligible.empty()) throw DataError("cannot mask a sequence without real tokens");
  const auto k = mask_count(eligible.size(), rate);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
    std::swap(eligible[i], eligible[pick(rng)]);
  }
  eligible.resize(k);
  std::sort(eligible.begin(), eligible.end());
  MaskingPlan plan;
  for (auto p : eligible) {
    plan.positions.push_back(p);
    plan.originals.push_back(seq.ids[p]);
    seq.ids[p] = smiles::kMaskId;
  }
  return plan;
}

bool PretrainConfig::set(std::string_view key, std::string_view value) {
  if (key == "epochs") epochs = config_size(key, value);
  else if (key == "batch") batch = config_size(key, value);
  else if (key == "lr") lr = config_real(key, value);
  else if (key == "weight_decay") weight_decay = config_real(key, value);
  else if (key == "mask_rate") mask_rate = config_real(key, value);
  else if (key == "seed") seed = config_u64(key, value);
  else return false;
  return true;
}

void PretrainConfig::validate() const {
  if (epochs == 0 || batch == 0) throw ConfigError("pretrain: epochs and batch must be positive");
  if (!(lr > 0) || weight_decay < 0) throw ConfigError("pretrain: lr must be positive, weight_decay non-negative");
  if (!(mask_rate > 0 && mask_rate < 1)) throw ConfigError("pretrain: mask_rate must lie in (0, 1)");
}

std::string PretrainConfig::to_text() const {
  std::ostringstream os;
  os << "epochs = " << epochs << "\nbatch = " << batch << "\nlr = " << format_real(lr)
     << "\nweight_decay = " << format_real(weight_decay) << "\nmask_rate = " << format_real(mask_rate)
     << "\nseed = " << seed << '\n';
  return os.str();
}

bool FinetuneConfig::set(std::string_view key, std::string_view value) {
  if (key == "epochs") epochs = config_size(key, value);
  else if (key == "batch") batch = config_size(key, value);
  else if (key == "lr") lr = config_real(key, value);
  else if (key == "weight_decay") weight_decay = config_real(key, value);
  else if (key == "randomize") randomize = config_bool(key, value);
  else if (key == "seed") seed = config_u64(key, value);
  else return false;
  return true;
}

void FinetuneConfig::validate() const {
  if (epochs == 0 || batch == 0) throw ConfigError("train: epochs and batch must be positive");
  if (!(lr > 0) || weight_decay < 0) throw ConfigError("train: lr must be positive, weight_decay non-negative");
}

std::string FinetuneConfig::to_text() const {
  std::ostringstream os;
  os << "epochs = " << epochs << "\nbatch = " << batch << "\nlr = " << format_real(lr)
     << "\nweight_decay = " << format_real(weight_decay) << "\nrandomize = " << (randomize ? "true" : "false")
     << "\nseed = " << seed << '\n';
  return os.str();
}

double mlm_loss(model::MlmModel<float>& model, std::span<const smiles::TokenSequence> masked,
                std::span<const MaskingPlan> plans, std::size_t batch) {
  ad::NoGradGuard no_grad;
  double total = 0;
  std::size_t count = 0;
  for (auto [lo, hi] : batch_ranges(masked.size(), batch)) {
    auto step = mlm_step(masked.subspan(lo, hi - lo), plans.subspan(lo, hi - lo));
    auto logits = model.predict(step.batch, step.positions, {});
    const auto loss = ad::cross_entropy_loss(logits, std::span<const std::int32_t>(step.targets)).item();
    total += static_cast<double>(loss) * static_cast<double>(step.targets.size());
    count += step.targets.size();
  }
  return total / static_cast<double>(count);
}

PretrainResult mlm_pretrain(model::MlmModel<float>& model, std::span<const std::vector<std::string>> corpus,
                            const smiles::Vocabulary& vocab, const PretrainConfig& config,
                            const EpochCallback& on_epoch) {
  config.validate();
  if (vocab.size() != model.config().vocab_size) {
    throw ConfigError("pretrain: vocabulary has " + std::to_string(vocab.size()) + " tokens but the model expects " +
                      std::to_string(model.config().vocab_size));
  }
  std::mt19937_64 rng(config.seed);
  PretrainResult r;
  r.optimizer = make_adam(config.lr, config.weight_decay);
  auto& params = model.parameters();
  const Mode train{true, &rng};
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto pairs = make_pretrain_pairs(corpus, vocab, model.config().max_len, rng);
    std::vector<MaskingPlan> plans;
    for (auto& p : pairs) plans.push_back(mask_sequence(p, config.mask_rate, rng));
    if (epoch == 0) r.initial_loss = mlm_loss(model, pairs, plans, config.batch);
    double total = 0;
    std::size_t count = 0, step_no = 0;
    for (auto [lo, hi] : batch_ranges(pairs.size(), config.batch)) {
      auto step = mlm_step(std::span<const smiles::TokenSequence>(pairs).subspan(lo, hi - lo),
                           std::span<const MaskingPlan>(plans).subspan(lo, hi - lo));
      auto logits = model.predict(step.batch, step.positions, train);
      auto loss = ad::cross_entropy_loss(logits, std::span<const std::int32_t>(step.targets));
      check_finite(loss.item(), epoch, step_no);
      params.zero_grad();
      ad::backward(loss);
      ad::adam_step(params, r.optimizer);
      total += static_cast<double>(loss.item()) * static_cast<double>(step.targets.size());
      count += step.targets.size();
      ++step_no;
    }
    r.epoch_losses.push_back(total / static_cast<double>(count));
    if (on_epoch) on_epoch(epoch, r.epoch_losses.back());
  }
  params.zero_grad();
  return r;
}

Predictions predict(model::KiteModel<float>& model, std::span<const PairExample> examples,
                    const smiles::Vocabulary& vocab, std::size_t batch) {
  ad::NoGradGuard no_grad;
  Predictions p;
  const std::size_t m = model.config().n_classes;
  std::size_t correct = 0;
  std::vector<std::size_t> idx(examples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t lo = 0; lo < idx.size(); lo += batch) {
    const std::size_t hi = std::min(idx.size(), lo + batch);
    auto b = example_batch(examples, std::span<const std::size_t>(idx).subspan(lo, hi - lo), vocab, model.config(),
                           nullptr);
    auto logits = model.forward(b, {});
    const auto v = logits.values();
    for (std::size_t r = 0; r < hi - lo; ++r) {
      const auto* row = v.data() + r * m;
      const double mx = *std::max_element(row, row + m);
      std::vector<double> prob(m);
      double z = 0;
      for (std::size_t j = 0; j < m; ++j) z += prob[j] = std::exp(static_cast<double>(row[j]) - mx);
      for (auto& x : prob) x /= z;
      const auto pred = argmax_row(v, r, m);
      const auto truth = examples[lo + r].label;
      correct += pred == truth;
      p.probabilities.push_back(std::move(prob));
      p.predicted.push_back(pred);
      p.truth.push_back(truth);
    }
  }
  p.accuracy = examples.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(examples.size());
  return p;
}

FinetuneResult finetune(model::KiteModel<float>& model, std::span<const PairExample> train,
                        std::span<const PairExample> eval, const smiles::Vocabulary& vocab,
                        const FinetuneConfig& config, const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (train.empty()) throw DataError("train: no training examples");
  if (vocab.size() != model.config().vocab_size) {
    throw ConfigError("train: vocabulary has " + std::to_string(vocab.size()) + " tokens but the model expects " +
                      std::to_string(model.config().vocab_size));
  }
  const std::size_t m = model.config().n_classes;
  check_labels(train, m);
  check_labels(eval, m);
  std::mt19937_64 rng(config.seed);
  FinetuneResult r;
  r.optimizer = make_adam(config.lr, config.weight_decay);
  auto& params = model.parameters();
  const Mode mode{true, &rng};
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    std::size_t correct = 0, step_no = 0;
    for (auto [lo, hi] : batch_ranges(order.size(), config.batch)) {
      const auto pick = std::span<const std::size_t>(order).subspan(lo, hi - lo);
      auto b = example_batch(train, pick, vocab, model.config(), config.randomize ? &rng : nullptr);
      std::vector<std::int32_t> targets;
      for (auto i : pick) targets.push_back(train[i].label);
      auto logits = model.forward(b, mode);
      auto loss = ad::cross_entropy_loss(logits, std::span<const std::int32_t>(targets));
      check_finite(loss.item(), epoch, step_no);
      params.zero_grad();
      ad::backward(loss);
      ad::adam_step(params, r.optimizer);
      total += static_cast<double>(loss.item()) * static_cast<double>(pick.size());
      for (std::size_t k = 0; k < pick.size(); ++k) correct += argmax_row(logits.values(), k, m) == targets[k];
      ++step_no;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(train.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.eval_accuracy = eval.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : predict(model, eval, vocab, config.batch).accuracy;
    const double score = eval.empty() ? rec.train_accuracy : rec.eval_accuracy;
    if (epoch == 0 || score > r.best_accuracy) {
      r.best_accuracy = score;
      r.best_epoch = epoch;
      r.best = ad::capture<float>(params, nullptr);
    }
    r.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  params.zero_grad();
  return r;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,train_accuracy,eval_accuracy\n";
  for (const auto& h : history) {
    os << h.epoch << ',' << format_real(h.train_loss) << ',' << format_real(h.train_accuracy) << ','
       << (std::isnan(h.eval_accuracy) ? std::string() : format_real(h.eval_accuracy)) << '\n';
  }
  return os.str();
}

void save_model(const std::filesystem::path& path, const ad::ParameterSet<float>& params,
                const model::ModelConfig& config, std::string_view kind, const ad::AdamState<float>* optimizer,
                std::map<std::string, std::string> metadata, std::string rng_state) {
  auto record = ad::capture<float>(params, optimizer);
  record.metadata = std::move(metadata);
  record.metadata["kind"] = std::string(kind);
  record.metadata["model_config"] = config.to_text();
  record.metadata["config_fingerprint"] = hex64(config.fingerprint());
  record.rng_state = std::move(rng_state);
  ad::write_checkpoint(path, record);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  LoadedCheckpoint out;
  out.record = ad::read_checkpoint(path);
  const auto& md = out.record.metadata;
  const auto cfg = md.find("model_config");
  const auto fp = md.find("config_fingerprint");
  const auto kind = md.find("kind");
  if (cfg == md.end() || fp == md.end() || kind == md.end()) {
    throw CheckpointError(path.string() + ": checkpoint lacks model metadata");
  }
  try {
    out.config = model::ModelConfig::from_text(cfg->second);
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": stored model config is invalid: " + e.what());
  }
  if (hex64(out.config.fingerprint()) != fp->second) {
    throw CheckpointError(path.string() + ": config fingerprint mismatch");
  }
  out.kind = kind->second;
  return out;
}

}  // namespace kite::training
