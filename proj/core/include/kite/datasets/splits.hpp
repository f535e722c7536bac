#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kite/datasets/dataset.hpp"
#include "kite/smiles/vocab.hpp"

namespace kite::datasets {

// Event indices into Dataset::events.
struct SplitBundle {
  std::set<std::string> test_drugs;
  std::vector<std::size_t> train;  // both drugs outside test_drugs
  std::vector<std::vector<std::size_t>> folds;  // partition of `train`
  std::vector<std::size_t> u1;  // exactly one drug in test_drugs
  std::vector<std::size_t> u2;  // both drugs in test_drugs
};

// Draws round(fraction * drug count) test drugs uniformly, then splits the
// events by membership and cuts the train pool into `folds` random parts.
// Throws DataError if the train pool is empty or, for fraction > 0, both
// inductive splits are empty.
SplitBundle make_inductive_splits(const Dataset& data, double test_drug_fraction, std::mt19937_64& rng,
                                  std::size_t folds = 5);

// Same construction from an explicit test-drug set.
SplitBundle split_by_test_drugs(const Dataset& data, std::set<std::string> test_drugs, std::mt19937_64& rng,
                                std::size_t folds = 5);

// Exhaustive check of the membership and partition invariants; returns one
// message per violation (empty when the bundle is sound).
std::vector<std::string> verify_split(const Dataset& data, const SplitBundle& split);

nlohmann::ordered_json split_to_json(const SplitBundle& split);
SplitBundle split_from_json(const nlohmann::json& j, const Dataset& data);

struct StsSeries {
  std::vector<std::int32_t> dropped_classes;   // fewer than min_class_count samples
  std::vector<std::vector<std::size_t>> steps;  // steps[0] = filtered pool
};

// Shrinking training sets: drop rare classes, then repeatedly keep a
// stratified `keep` share (largest-remainder rounding, at least one sample
// per class) until the size is at most `stop_fraction` of steps[0] or can
// shrink no further. Every step is a subset of the previous one.
StsSeries sts_series(const Dataset& data, const std::vector<std::size_t>& pool, std::size_t min_class_count,
                     std::mt19937_64& rng, double keep = 0.9, double stop_fraction = 0.075);

// Per-class kept counts for one stratified step of `keep`.
std::vector<std::size_t> stratified_quota(const std::vector<std::size_t>& class_counts, double keep);

struct SeqlenBins {
  std::size_t width = 0;
  std::vector<std::size_t> lengths;  // aligned with the input event list
  std::map<std::size_t, std::vector<std::size_t>> bins;  // bin start -> event indices
};

// Token length of each event = real tokens of encode_pair(a, b) before
// padding; bins are [k * width, (k + 1) * width).
SeqlenBins seqlen_bins(const Dataset& data, const std::vector<std::size_t>& events, const smiles::Vocabulary& vocab,
                       std::size_t bin_width, std::size_t max_len = 500);

}  // namespace kite::datasets
