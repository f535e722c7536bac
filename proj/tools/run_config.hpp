#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kite/common/config.hpp"
#include "kite/datasets/synthetic.hpp"
#include "kite/kg/kg.hpp"
#include "kite/model/config.hpp"
#include "kite/training/training.hpp"

namespace kite::cli {

// Every tunable of every subcommand, addressed as `section.key`:
//   model.*     architecture (vocab_size, n_classes and kg_dim are filled
//               from the inputs unless given)
//   pretrain.*  epochs, batch, lr, weight_decay, mask_rate, seed
//   train.*     epochs, batch, lr, weight_decay, randomize, seed
//   kg.*        margin, dim, epochs, batch_size, learning_rate, negatives,
//               norm, seed, entity_template
//   vocab.*     min_count
//   split.*     test_fraction, folds
//   sts.*       min_class_count, keep, stop_fraction
//   seqlen.*    bin_width
//   eval.*      batch
//   synth.*     drugs, events, classes, min_atoms, max_atoms, seed
struct RunConfig {
  model::ModelConfig model;
  training::PretrainConfig pretrain;
  training::FinetuneConfig train;
  kg::TransEConfig kg;
  std::string entity_template = "Compound::{id}";
  std::size_t vocab_min_count = 1;
  double split_test_fraction = 0.15;
  std::size_t split_folds = 5;
  std::size_t sts_min_class_count = 5;
  double sts_keep = 0.9;
  double sts_stop_fraction = 0.075;
  std::size_t seqlen_bin_width = 25;
  std::size_t eval_batch = 32;
  datasets::SyntheticConfig synth;

  std::uint64_t seed = 0;  // master seed
  std::set<std::string> given;  // keys set by file or --set

  // ConfigError on an unknown key or a bad value; the message carries the
  // line number for file entries.
  void set(const ConfigEntry& entry);
  bool was_given(std::string_view key) const { return given.count(std::string(key)) != 0; }
  // Seeds not given explicitly follow the master seed.
  void apply_master_seed(std::uint64_t master);
  void validate() const;
  std::string to_text() const;
  std::uint64_t fingerprint() const;
};

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                          std::uint64_t master_seed);

// Process exit status and the short kind tag printed as
// `kite: error[<kind>]: <message>`:
//   2 config, 3 data / parse / checkpoint / index / shape, 4 numeric, 1 other.
struct ErrorClass {
  int code;
  const char* kind;
};
ErrorClass classify(const std::exception& e);

}  // namespace kite::cli
