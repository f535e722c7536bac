#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kite/model/kite_model.hpp"
#include "kite/smiles/vocab.hpp"
#include "kite/tensor/adam.hpp"
#include "kite/tensor/checkpoint_io.hpp"

namespace kite::training {

// Partner index for every corpus element: uniform over the others.
std::vector<std::size_t> pretrain_partners(std::size_t corpus_size, std::mt19937_64& rng);

// One pair per corpus element, in corpus order: (corpus[i], corpus[partner]).
std::vector<smiles::TokenSequence> make_pretrain_pairs(std::span<const std::vector<std::string>> corpus,
                                                       const smiles::Vocabulary& vocab, std::size_t max_len,
                                                       std::mt19937_64& rng);

struct MaskingPlan {
  std::vector<std::size_t> positions;  // ascending
  std::vector<std::int32_t> originals;
};

// Number of positions masked for `real` eligible tokens.
std::size_t mask_count(std::size_t real, double rate);

// Replaces max(1, round(rate * eligible)) non-PAD, non-SEP tokens with MASK.
MaskingPlan mask_sequence(smiles::TokenSequence& seq, double rate, std::mt19937_64& rng);

struct PretrainConfig {
  std::size_t epochs = 700;
  std::size_t batch = 8;
  double lr = 1e-5;
  double weight_decay = 0.0;
  double mask_rate = 0.15;
  std::uint64_t seed = 0;

  bool set(std::string_view key, std::string_view value);
  void validate() const;
  std::string to_text() const;
};

struct FinetuneConfig {
  std::size_t epochs = 100;
  std::size_t batch = 32;
  double lr = 5e-5;
  double weight_decay = 1e-5;
  bool randomize = true;  // fresh SMILES spelling per sample and epoch
  std::uint64_t seed = 0;

  bool set(std::string_view key, std::string_view value);
  void validate() const;
  std::string to_text() const;
};

struct PretrainResult {
  double initial_loss = 0;  // masked-token loss of the untrained model on epoch-0 inputs
  std::vector<double> epoch_losses;
  ad::AdamState<float> optimizer;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Masked-token cross entropy over the corpus; NumericError names the epoch
// and step if the loss stops being finite.
PretrainResult mlm_pretrain(model::MlmModel<float>& model, std::span<const std::vector<std::string>> corpus,
                            const smiles::Vocabulary& vocab, const PretrainConfig& config,
                            const EpochCallback& on_epoch = {});

// Mean masked-token loss of `model` (eval mode) on fixed inputs.
double mlm_loss(model::MlmModel<float>& model, std::span<const smiles::TokenSequence> masked,
                std::span<const MaskingPlan> plans, std::size_t batch);

struct PairExample {
  std::string smiles_a;
  std::string smiles_b;
  std::int32_t label = 0;
  std::vector<float> kg;  // empty = zero pair vector
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0;
  double train_accuracy = 0;
  double eval_accuracy = 0;  // NaN without an eval split
};

struct FinetuneResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_accuracy = 0;
  ad::CheckpointRecord best;  // parameters and buffers at best_epoch
  ad::AdamState<float> optimizer;
};

// Cross-entropy fine-tuning. The retained state is the epoch with the highest
// eval accuracy (train accuracy when `eval` is empty); ties keep the earlier.
FinetuneResult finetune(model::KiteModel<float>& model, std::span<const PairExample> train,
                        std::span<const PairExample> eval, const smiles::Vocabulary& vocab,
                        const FinetuneConfig& config, const std::function<void(const EpochRecord&)>& on_epoch = {});

struct Predictions {
  std::vector<std::vector<double>> probabilities;  // softmax rows
  std::vector<std::int32_t> predicted;
  std::vector<std::int32_t> truth;
  double accuracy = 0;
};

// Eval-mode forward over the examples as written (no randomization).
Predictions predict(model::KiteModel<float>& model, std::span<const PairExample> examples,
                    const smiles::Vocabulary& vocab, std::size_t batch);

std::string history_csv(const std::vector<EpochRecord>& history);

// Checkpoints carry the model config text, its fingerprint and `kind`
// ("mlm" or "classifier") in the metadata.
void save_model(const std::filesystem::path& path, const ad::ParameterSet<float>& params,
                const model::ModelConfig& config, std::string_view kind, const ad::AdamState<float>* optimizer,
                std::map<std::string, std::string> metadata = {}, std::string rng_state = {});

struct LoadedCheckpoint {
  model::ModelConfig config;
  std::string kind;
  ad::CheckpointRecord record;
};

// CheckpointError when the stored fingerprint disagrees with the stored config.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kite::training
